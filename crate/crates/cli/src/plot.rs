use std::path::Path;

use plotters::prelude::*;

use crate::report::Table;

/// Line chart of every column against the first; `log10` of the values when all are positive.
pub fn plot_table(t: &Table, path: &Path) -> Result<(), String> {
    let xs: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
    let series: Vec<(String, Vec<(f64, f64)>)> = (1..t.headers.len())
        .map(|j| {
            let pts = t
                .rows
                .iter()
                .map(|r| (r[0], r[j]))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            (t.headers[j].clone(), pts)
        })
        .collect();
    let log = series.iter().all(|(_, p)| p.iter().all(|&(_, y)| y > 0.0));
    let series: Vec<(String, Vec<(f64, f64)>)> = series
        .into_iter()
        .map(|(name, pts)| {
            if log {
                (format!("log10 {name}"), pts.into_iter().map(|(x, y)| (x, y.log10())).collect())
            } else {
                (name, pts)
            }
        })
        .collect();
    let (x0, x1) = bounds(xs.iter().copied());
    let (y0, y1) = bounds(series.iter().flat_map(|(_, p)| p.iter().map(|&(_, y)| y)));

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let mut chart = ChartBuilder::on(&root)
        .caption(&t.name, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .x_desc(t.headers[0].as_str())
        .draw()
        .map_err(|e| e.to_string())?;
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(|e| e.to_string())?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(|e| e.to_string())?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| e.to_string())?;
    root.present().map_err(|e| e.to_string())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}
