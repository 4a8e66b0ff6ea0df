//! Fixed-width text maps and a self-contained SVG rendering of the grid:
//! each cell lists the modalities classified there, the number of
//! individuals, and optionally a per-modality breakdown of one split
//! variable, `count(a,b)`. Super-class renderings add a class number per
//! cell.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, UnitId};
use crate::superclass::SuperClassification;

/// What one grid cell displays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellContent {
    pub modalities: Vec<String>,
    pub count: usize,
    pub split: Option<Vec<usize>>,
}

impl CellContent {
    fn count_line(&self) -> String {
        match &self.split {
            Some(parts) if self.count > 0 => {
                let inner = parts
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                format!("{}({inner})", self.count)
            }
            _ => self.count.to_string(),
        }
    }
}

/// Build per-unit cell contents from classified individuals and modalities.
/// `split` gives, per individual, the ordinal of its modality within the
/// split variable, together with that variable's modality count.
pub fn assemble_cells(
    spec: &GridSpec,
    individual_units: &[UnitId],
    modality_units: &[(String, UnitId)],
    split: Option<(&[usize], usize)>,
) -> Result<Vec<CellContent>> {
    let mut cells = vec![CellContent::default(); spec.units()];
    if let Some((ordinals, arity)) = split {
        if ordinals.len() != individual_units.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} split ordinals for {} individuals",
                ordinals.len(),
                individual_units.len()
            )));
        }
        for cell in &mut cells {
            cell.split = Some(vec![0; arity]);
        }
    }
    for (idx, u) in individual_units.iter().enumerate() {
        spec.check_unit(*u)?;
        let cell = &mut cells[u.index()];
        cell.count += 1;
        if let (Some(parts), Some((ordinals, _))) = (&mut cell.split, split) {
            parts[ordinals[idx]] += 1;
        }
    }
    for (label, u) in modality_units {
        spec.check_unit(*u)?;
        cells[u.index()].modalities.push(label.clone());
    }
    // split counts must add up to the cell count
    for cell in &cells {
        if let Some(parts) = &cell.split {
            assert_eq!(parts.iter().sum::<usize>(), cell.count);
        }
    }
    Ok(cells)
}

fn cell_lines(cell: &CellContent, class: Option<usize>) -> Vec<String> {
    let mut lines = Vec::new();
    if let Some(c) = class {
        lines.push(format!("#{}", c + 1));
    }
    lines.extend(cell.modalities.iter().cloned());
    lines.push(cell.count_line());
    lines
}

/// Diff-stable fixed-width text map, one bordered cell per unit.
pub fn render_text(
    spec: &GridSpec,
    cells: &[CellContent],
    sc: Option<&SuperClassification>,
) -> String {
    let all_lines: Vec<Vec<String>> = (0..spec.units())
        .map(|u| cell_lines(&cells[u], sc.map(|s| s.labels[u])))
        .collect();
    let mut widths = vec![1usize; spec.cols()];
    for u in 0..spec.units() {
        let col = u % spec.cols();
        for line in &all_lines[u] {
            widths[col] = widths[col].max(line.len());
        }
    }
    let border: String = {
        let mut b = String::from("+");
        for w in &widths {
            b.push_str(&"-".repeat(w + 2));
            b.push('+');
        }
        b.push('\n');
        b
    };
    let mut out = String::new();
    for row in 0..spec.rows() {
        out.push_str(&border);
        let height = (0..spec.cols())
            .map(|c| all_lines[row * spec.cols() + c].len())
            .max()
            .unwrap_or(1);
        for line_idx in 0..height {
            out.push('|');
            for col in 0..spec.cols() {
                let lines = &all_lines[row * spec.cols() + col];
                let text = lines.get(line_idx).map(String::as_str).unwrap_or("");
                out.push_str(&format!(" {text:<width$} |", width = widths[col]));
            }
            out.push('\n');
        }
    }
    out.push_str(&border);
    out
}

const PALETTE: [&str; 12] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
    "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
];

/// Single-file SVG map; cells are colored by super class when one is given.
pub fn render_svg(
    spec: &GridSpec,
    cells: &[CellContent],
    sc: Option<&SuperClassification>,
) -> String {
    const CELL_W: usize = 130;
    const CELL_H: usize = 90;
    const PAD: usize = 4;
    let width = spec.cols() * CELL_W;
    let height = spec.rows() * CELL_H;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"11\">\n"
    ));
    for u in 0..spec.units() {
        let (row, col) = spec.position(UnitId(u));
        let x = col * CELL_W;
        let y = row * CELL_H;
        let fill = match sc {
            Some(s) => PALETTE[s.labels[u] % PALETTE.len()],
            None => "#ffffff",
        };
        out.push_str(&format!(
            "  <rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
             fill=\"{fill}\" stroke=\"#333333\"/>\n"
        ));
        let mut lines = Vec::new();
        if let Some(s) = sc {
            lines.push(format!("#{}", s.labels[u] + 1));
        }
        lines.extend(cells[u].modalities.iter().cloned());
        lines.push(cells[u].count_line());
        for (i, line) in lines.iter().enumerate() {
            let ty = y + PAD + 11 * (i + 1);
            if ty + PAD > y + CELL_H {
                break;
            }
            let escaped = line.replace('&', "&amp;").replace('<', "&lt;");
            out.push_str(&format!(
                "  <text x=\"{}\" y=\"{ty}\">{escaped}</text>\n",
                x + PAD
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
