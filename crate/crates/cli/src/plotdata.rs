//! Plot-ready exports: tidy long-format CSV (series, x, y), binned
//! histograms, and a minimal static SVG line chart per figure.

use std::io::Write;
use std::path::Path;

use anyhow::Result;

pub struct Series<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Writes `series,x,y` rows for all series.
pub fn write_series_csv(path: &Path, series: &[Series<'_>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "series,x,y")?;
    for s in series {
        for (x, y) in s.x.iter().zip(s.y) {
            writeln!(f, "{},{},{}", s.name, x, y)?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Equal-width histogram; returns (bin_centers, counts) with counts summing
/// to the sample count.
pub fn histogram(values: &[f64], bins: usize) -> (Vec<f64>, Vec<usize>) {
    assert!(bins >= 1 && !values.is_empty());
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let centers = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    (centers, counts)
}

pub fn write_histogram_csv(path: &Path, values: &[f64], bins: usize) -> Result<()> {
    let (centers, counts) = histogram(values, bins);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "bin_center,count")?;
    for (c, n) in centers.iter().zip(&counts) {
        writeln!(f, "{},{}", c, n)?;
    }
    f.flush()?;
    Ok(())
}

/// Minimal self-contained SVG line chart.
pub fn write_svg_lines(path: &Path, title: &str, series: &[Series<'_>]) -> Result<()> {
    const W: f64 = 800.0;
    const H: f64 = 420.0;
    const MARGIN: f64 = 50.0;
    const COLORS: [&str; 5] = ["#1f6feb", "#d1242f", "#1a7f37", "#8250df", "#9a6700"];

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &x in s.x {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        for &y in s.y {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if x_max <= x_min || !x_max.is_finite() {
        x_max = x_min + 1.0;
    }
    if y_max <= y_min || !y_max.is_finite() {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y_min) / (y_max - y_min) * (H - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        title
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#333\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"#333\"/>\n",
        m = MARGIN,
        r = W - MARGIN,
        t = MARGIN,
        b = H - MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{m}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.4}</text>\n\
         <text x=\"{m}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.4}</text>\n",
        H - MARGIN + 14.0,
        y_min,
        MARGIN - 6.0,
        y_max,
        m = 4.0
    ));
    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let points: Vec<String> =
            s.x.iter()
                .zip(s.y)
                .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>\n",
            W - MARGIN + 4.0 - 120.0,
            MARGIN + 16.0 * idx as f64,
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_sum_to_samples() {
        let values: Vec<f64> = (0..137).map(|i| (i as f64 * 0.37).sin()).collect();
        let (_, counts) = histogram(&values, 12);
        assert_eq!(counts.iter().sum::<usize>(), values.len());
    }

    #[test]
    fn tidy_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.csv");
        let x = [0.0, 1.0];
        let y = [3.3, 3.2];
        write_series_csv(
            &path,
            &[Series {
                name: "voltage",
                x: &x,
                y: &y,
            }],
        )
        .unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body, "series,x,y\nvoltage,0,3.3\nvoltage,1,3.2\n");
    }

    #[test]
    fn svg_contains_all_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        let x = [0.0, 1.0, 2.0];
        let a = [1.0, 2.0, 1.5];
        let b = [0.5, 0.6, 0.7];
        write_svg_lines(
            &path,
            "overlay",
            &[
                Series {
                    name: "hybrid",
                    x: &x,
                    y: &a,
                },
                Series {
                    name: "physics",
                    x: &x,
                    y: &b,
                },
            ],
        )
        .unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body.matches("<polyline").count(), 2);
        assert!(body.contains("hybrid") && body.contains("physics"));
    }
}
