//! Static SVG renderings: the driving noise path and a trajectory overlay.

use jumpsde::harness::PathSeries;
use jumpsde::noise::CompoundPoissonPath;
use jumpsde::sim::RecordKind;
use plotters::coord::ranged1d::ValueFormatter;
use plotters::prelude::*;

const SIZE: (u32, u32) = (800, 500);
const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(140, 86, 75),
];

type PlotResult = Result<(), Box<dyn std::error::Error>>;

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).abs().max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Step plot of `C(t)` with a marker at each jump.
pub fn noise_svg(path: &CompoundPoissonPath) -> Result<String, Box<dyn std::error::Error>> {
    let horizon = path.horizon();
    let mut steps = vec![(0.0, 0.0)];
    let mut c = 0.0;
    for (t, r) in path.jumps() {
        steps.push((t, c));
        c += r;
        steps.push((t, c));
    }
    steps.push((horizon, c));
    let lo = steps.iter().map(|p| p.1).fold(0.0, f64::min);
    let hi = steps.iter().map(|p| p.1).fold(0.0, f64::max);
    let (lo, hi) = padded(lo, hi);

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("Compound Poisson path C(t)", ("sans-serif", 22))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(55)
            .build_cartesian_2d(0.0..horizon, lo..hi)?;
        chart.configure_mesh().x_desc("t").y_desc("C(t)").draw()?;
        chart.draw_series(LineSeries::new(steps, &PALETTE[0]))?;
        let mut acc = 0.0;
        chart.draw_series(path.jumps().map(|(t, r)| {
            acc += r;
            Circle::new((t, acc), 3, PALETTE[0].filled())
        }))?;
        root.present()?;
    }
    Ok(svg)
}

/// Trajectories of one path under each interpretation, the reference as a
/// black line, and jump times as ticks along the bottom axis. A log axis is
/// used when every value is positive.
pub fn comparison_svg(
    series: &PathSeries,
    labels: &[String],
) -> Result<String, Box<dyn std::error::Error>> {
    let mut all: Vec<f64> = series.values.iter().flatten().copied().collect();
    if let Some(r) = &series.reference {
        all.extend(r);
    }
    all.retain(|v| v.is_finite());
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let horizon = series.times.last().copied().unwrap_or(1.0);
    let mut svg = String::new();
    if lo > 0.0 {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let range = (lo / 1.2)..(hi * 1.2);
        let chart = ChartBuilder::on(&root)
            .caption(
                "Trajectories against the exact solution",
                ("sans-serif", 22),
            )
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(65)
            .build_cartesian_2d(0.0..horizon, range.log_scale())?;
        draw_overlay(&root, chart, series, labels, lo / 1.2)?;
    } else {
        let (lo, hi) = if all.is_empty() {
            (0.0, 1.0)
        } else {
            padded(lo, hi)
        };
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let chart = ChartBuilder::on(&root)
            .caption(
                "Trajectories against the exact solution",
                ("sans-serif", 22),
            )
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(65)
            .build_cartesian_2d(0.0..horizon, lo..hi)?;
        draw_overlay(&root, chart, series, labels, lo)?;
    }
    Ok(svg)
}

fn draw_overlay<'a, Y>(
    root: &DrawingArea<SVGBackend<'a>, plotters::coord::Shift>,
    mut chart: ChartContext<
        'a,
        SVGBackend<'a>,
        Cartesian2d<plotters::coord::types::RangedCoordf64, Y>,
    >,
    series: &PathSeries,
    labels: &[String],
    floor: f64,
) -> PlotResult
where
    Y: Ranged<ValueType = f64> + ValueFormatter<f64>,
{
    chart.configure_mesh().x_desc("t").y_desc("Z(t)").draw()?;
    for (j, values) in series.values.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let points: Vec<(f64, f64)> = series
            .times
            .iter()
            .copied()
            .zip(values.iter().copied())
            .collect();
        chart
            .draw_series(LineSeries::new(points, color.stroke_width(2)))?
            .label(labels.get(j).cloned().unwrap_or_default())
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
    }
    if let Some(reference) = &series.reference {
        let points: Vec<(f64, f64)> = series
            .times
            .iter()
            .copied()
            .zip(reference.iter().copied())
            .collect();
        chart
            .draw_series(LineSeries::new(points, BLACK.stroke_width(1)))?
            .label("exact")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    }
    let jump_times = series
        .times
        .iter()
        .zip(&series.kinds)
        .filter(|(_, k)| **k == RecordKind::PostJump)
        .map(|(t, _)| *t);
    chart.draw_series(
        jump_times.map(|t| TriangleMarker::new((t, floor), 5, BLACK.mix(0.6).filled())),
    )?;
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperLeft)
        .draw()?;
    root.present()?;
    Ok(())
}
