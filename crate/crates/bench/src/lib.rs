//! Synthetic documents for benchmarking the section scanners.

use litproc_core::SourceFormat;

/// A document of roughly `lines` lines alternating prose, code and results.
pub fn synthetic_document(format: SourceFormat, lines: usize) -> String {
    let block = match format {
        SourceFormat::Latex => {
            "Some prose about the computation below.\n\
             \\begin{python}\n\
             x = sum(range(10))\n\
             print(x)\n\
             \\end{python}\n\
             \\begin{result}\n\
             45\n\
             \\end{result}\n\
             %lignore\n\
             \\begin{sh}\n\
             echo skipped\n\
             \\end{sh}\n\
             %lnoignore\n"
        }
        SourceFormat::Markdown => {
            "Some prose about the computation below.\n\
             ```python\n\
             x = sum(range(10))\n\
             print(x)\n\
             ```\n\
             ```result\n\
             45\n\
             ```\n\
             <!--litrepl:ignore-->\n\
             ```sh\n\
             echo skipped\n\
             ```\n\
             <!--litrepl:noignore-->\n"
        }
    };
    let per_block = block.lines().count();
    block.repeat(lines.div_ceil(per_block))
}
