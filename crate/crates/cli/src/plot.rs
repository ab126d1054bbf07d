//! Static SVG figures drawn from the CSV outputs: spectra in the complex
//! plane, rate against `g` with the predicted slope, and histograms of the
//! bandwidth decay rates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
/// Spectra drawn per ring length.
const MAX_SPECTRA: usize = 4;
/// Samples whose rate curves are drawn.
const MAX_RATE_SAMPLES: usize = 3;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A plotting canvas with linear axes.
pub struct Figure {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    padded(lo, hi)
}

/// A short label for an axis tick.
fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self { x, y, body: String::new() }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn point(&mut self, x: f64, y: f64, color: &str) {
        if x.is_finite() && y.is_finite() {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.8"/>"#,
                self.px(x),
                self.py(y)
            );
        }
    }

    pub fn line(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        if coords.len() < 2 {
            return;
        }
        let dash = if dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>"#,
            coords.join(" ")
        );
    }

    pub fn bar(&mut self, x0: f64, x1: f64, h: f64, color: &str) {
        let (l, r) = (self.px(x0), self.px(x1));
        let (top, base) = (self.py(h), self.py(self.y.0.max(0.0)));
        let _ = writeln!(
            self.body,
            r#"<rect x="{l:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" stroke="white"/>"#,
            (r - l).max(0.0),
            (base - top).max(0.0)
        );
    }

    /// The finished document with axes, ticks and labels.
    pub fn render(&self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            s,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                s,
                r#"<line x1="{xp:.2}" y1="{b}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#,
                b + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                b + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{yp:.2}" x2="{l}" y2="{yp:.2}" stroke="black"/>"#,
                l - 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                l - 8.0,
                yp + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 15.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(ylabel)
        );
        let _ = writeln!(
            s,
            r#"<svg x="{l}" y="{t}" width="{}" height="{}" viewBox="{l} {t} {} {}" overflow="hidden">"#,
            r - l,
            b - t,
            r - l,
            b - t
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n</g>\n</svg>\n");
        s
    }
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let header = r
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Config(format!("{}: no column {name}", path.display())))
}

fn num(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse().unwrap_or(f64::NAN),
    }
}

/// Eigenvalues from a `g,j,re,im,is_real` file, coloured by `g`.
pub fn spectrum_scatter(path: &Path, title: &str) -> Result<String, CliError> {
    let (h, rows) = read_rows(path)?;
    let (cg, cre, cim) = (column(&h, "g", path)?, column(&h, "re", path)?, column(&h, "im", path)?);
    let pts: Vec<(f64, f64, f64)> = rows.iter().map(|r| (num(&r[cg]), num(&r[cre]), num(&r[cim]))).collect();
    let mut fig = Figure::new(range(pts.iter().map(|p| p.1)), range(pts.iter().map(|p| p.2).chain([0.0])));
    let mut gs: Vec<u64> = pts.iter().map(|p| p.0.to_bits()).collect();
    gs.sort_by(|a, b| f64::from_bits(*a).total_cmp(&f64::from_bits(*b)));
    gs.dedup();
    for (g, re, im) in &pts {
        let k = gs.iter().position(|x| *x == g.to_bits()).unwrap_or(0);
        fig.point(*re, *im, PALETTE[k % PALETTE.len()]);
    }
    let legend: Vec<String> = gs.iter().map(|g| tick(f64::from_bits(*g))).collect();
    Ok(fig.render(&format!("{title} (g = {})", legend.join(", ")), "Re λ", "Im λ"))
}

/// Rate `-(1/n)log|λ_j(g) - λ_j(0)|` against `g` for the first samples of a
/// `rates.csv`, each with its predicted line `γ̂ - g` dashed.
pub fn rate_lines(path: &Path, title: &str) -> Result<String, CliError> {
    let (h, rows) = read_rows(path)?;
    let (cs, cj, cg, cr, cp) = (
        column(&h, "sample_id", path)?,
        column(&h, "j", path)?,
        column(&h, "g", path)?,
        column(&h, "rate", path)?,
        column(&h, "predicted", path)?,
    );
    let mut curves: BTreeMap<(u64, u64), Vec<(f64, f64, f64)>> = BTreeMap::new();
    let mut samples: Vec<u64> = Vec::new();
    for r in &rows {
        let s: u64 = r[cs].parse().unwrap_or(0);
        if !samples.contains(&s) {
            samples.push(s);
        }
        if samples.iter().position(|x| *x == s).unwrap_or(usize::MAX) >= MAX_RATE_SAMPLES {
            continue;
        }
        let j: u64 = r[cj].parse().unwrap_or(0);
        curves.entry((s, j)).or_default().push((num(&r[cg]), num(&r[cr]), num(&r[cp])));
    }
    let all = || curves.values().flatten();
    let mut fig = Figure::new(range(all().map(|p| p.0)), range(all().flat_map(|p| [p.1, p.2])));
    for (k, pts) in curves.values().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let measured: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, p.1)).collect();
        let predicted: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, p.2)).collect();
        fig.line(&measured, color, false);
        for (x, y) in &measured {
            fig.point(*x, *y, color);
        }
        fig.line(&predicted, color, true);
    }
    Ok(fig.render(title, "g", "rate (dashed: γ̂ − g, slope −1)"))
}

/// Histogram of `-logwidth / n` over every band file given.
pub fn bandwidth_histogram(paths: &[&Path], title: &str) -> Result<String, CliError> {
    let mut rates = Vec::new();
    for p in paths {
        let (h, rows) = read_rows(p)?;
        let c = column(&h, "logwidth", p)?;
        let n = rows.len() as f64;
        rates.extend(rows.iter().map(|r| -num(&r[c]) / n).filter(|x| x.is_finite()));
    }
    let (lo, hi) = range(rates.iter().copied());
    let bins = 30;
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in &rates {
        counts[(((x - lo) / w) as usize).min(bins - 1)] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut fig = Figure::new((lo, hi), (0.0, 1.05 * top));
    for (k, c) in counts.iter().enumerate() {
        let x0 = lo + k as f64 * w;
        fig.bar(x0, x0 + w, *c as f64, PALETTE[0]);
    }
    Ok(fig.render(title, "−(1/n)·log bandwidth", "count"))
}

/// Every figure that can be drawn from the listed files of `input`, as
/// `(file name, svg)` pairs in a fixed order.
pub fn render_all(input: &Path, files: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut per_n: BTreeMap<String, (Vec<&String>, Vec<&String>, Option<&String>)> = BTreeMap::new();
    for f in files {
        let mut parts = f.splitn(3, '/');
        let (Some(prefix), Some(kind)) = (parts.next(), parts.next()) else {
            continue;
        };
        let entry = per_n.entry(prefix.to_string()).or_default();
        match kind {
            "flows" | "spectrum" if f.ends_with(".csv") => entry.0.push(f),
            "bands" if f.ends_with(".csv") => entry.1.push(f),
            "rates.csv" => entry.2 = Some(f),
            _ => {}
        }
    }
    for (prefix, (spectra, bands, rates)) in per_n {
        for f in spectra.iter().take(MAX_SPECTRA) {
            let stem = Path::new(f.as_str()).file_stem().and_then(|s| s.to_str()).unwrap_or("sample");
            let svg = spectrum_scatter(&input.join(f.as_str()), &format!("Spectrum {prefix} {stem}"))?;
            out.push((format!("{prefix}/spectrum_{stem}.svg"), svg));
        }
        if let Some(f) = rates {
            out.push((
                format!("{prefix}/rates.svg"),
                rate_lines(&input.join(f.as_str()), &format!("Decay rate {prefix}"))?,
            ));
        }
        if !bands.is_empty() {
            let paths: Vec<std::path::PathBuf> = bands.iter().map(|f| input.join(f.as_str())).collect();
            let refs: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
            out.push((
                format!("{prefix}/bandwidth_rates.svg"),
                bandwidth_histogram(&refs, &format!("Bandwidth rates {prefix}"))?,
            ));
        }
    }
    Ok(out)
}
