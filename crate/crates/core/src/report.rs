//! CSV rendering of profiles. Numbers carry 9 significant digits and ∞ is
//! written as `inf`.

use crate::divergence::DivergenceProfile;
use crate::graph::PointId;
use crate::morse::MorseProfile;
use crate::profile::Profile;
use crate::projection::GeodesicImageProfile;

/// `%.9g`-style rendering.
pub fn format_number(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-5..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa.to_string()), sign, exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), format_number)
}

fn id(p: PointId) -> String {
    p.0.to_string()
}

/// A header and rows, all pre-rendered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `r,value,<witness names>`.
pub fn profile_table(p: &Profile) -> Table {
    let mut h = header(&["r", "value"]);
    h.extend(p.witness_names.iter().cloned());
    let rows = p
        .samples
        .iter()
        .map(|s| {
            let mut row = vec![format_number(s.r), opt(s.value)];
            row.extend((0..p.witness_names.len()).map(|k| s.witness.get(k).map_or_else(String::new, |&v| id(v))));
            row
        })
        .collect();
    Table { header: h, rows }
}

/// `r,value,s,start,end`.
pub fn divergence_table(p: &DivergenceProfile) -> Table {
    let rows = p
        .samples
        .iter()
        .map(|s| {
            let (a, b) = s.endpoints.map_or((String::new(), String::new()), |(a, b)| (id(a), id(b)));
            vec![format_number(s.r), opt(s.value), s.s.map_or_else(String::new, format_number), a, b]
        })
        .collect();
    Table { header: header(&["r", "value", "s", "start", "end"]), rows }
}

/// `r,value,separation,y1,y2` with r = L and value = μ̂(L).
pub fn morse_table(p: &MorseProfile) -> Table {
    let rows = p
        .curves
        .iter()
        .map(|c| {
            let w = c.points.iter().find(|q| q.1 == c.mu_hat);
            let (sep, a, b) = w.map_or((String::new(), String::new(), String::new()), |q| {
                (format_number(q.0), id(q.2.endpoints.0), id(q.2.endpoints.1))
            });
            vec![format_number(c.l), format_number(c.mu_hat), sep, a, b]
        })
        .collect();
    Table { header: header(&["r", "value", "separation", "y1", "y2"]), rows }
}

/// `r,value,x,y,max_endpoint_dist,min_dist` with r the largest distance to Y
/// along the segment and value the projection diameter.
pub fn geodesic_image_table(p: &GeodesicImageProfile) -> Table {
    let mut recs = p.records.clone();
    recs.sort_by(|a, b| a.max_interior_dist.total_cmp(&b.max_interior_dist).then((a.x, a.y).cmp(&(b.x, b.y))));
    let rows = recs
        .iter()
        .map(|r| {
            vec![
                format_number(r.max_interior_dist),
                format_number(r.diam_proj),
                id(r.x),
                id(r.y),
                format_number(r.max_endpoint_dist),
                format_number(r.min_dist),
            ]
        })
        .collect();
    Table { header: header(&["r", "value", "x", "y", "max_endpoint_dist", "min_dist"]), rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(format_number(16.0), "16");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456789.0), "123456789");
        assert_eq!(format_number(1234567891.0), "1.23456789e+09");
        assert_eq!(format_number(1e-7), "1e-07");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(-2.25), "-2.25");
    }
}
