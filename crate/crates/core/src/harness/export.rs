//! Reconstructions as PLY point clouds, SVG scatter plots and CSV.

use std::fmt::Write as _;

use crate::geometry::Point3;

const RECON_COLOR: [u8; 3] = [220, 60, 40];
const GT_COLOR: [u8; 3] = [40, 90, 220];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    PointCloud,
    ScatterSvg,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pointcloud" | "ply" => Ok(Self::PointCloud),
            "scatter-svg" | "svg" => Ok(Self::ScatterSvg),
            "csv" => Ok(Self::Csv),
            _ => Err(format!("unknown export format `{s}` (expected pointcloud, scatter-svg or csv)")),
        }
    }
}

/// Coordinate plane of the SVG scatter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum View {
    Xy,
    #[default]
    Xz,
    Yz,
}

impl View {
    fn axes(self) -> (usize, usize) {
        match self {
            Self::Xy => (0, 1),
            Self::Xz => (0, 2),
            Self::Yz => (1, 2),
        }
    }
}

impl std::str::FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xy" => Ok(Self::Xy),
            "xz" => Ok(Self::Xz),
            "yz" => Ok(Self::Yz),
            _ => Err(format!("unknown view `{s}` (expected xy, xz or yz)")),
        }
    }
}

/// ASCII PLY with the reconstruction in red and, when given, ground truth
/// in blue plus one edge per reconstructed/GT pair.
pub fn to_ply(points: &[Point3], gt: Option<&[Point3]>) -> String {
    let gt = gt.unwrap_or(&[]);
    let n_vertices = points.len() + gt.len();
    let n_edges = gt.len().min(points.len());
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {n_vertices}\nproperty double x\nproperty double y\n\
         property double z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
    );
    if n_edges > 0 {
        let _ = write!(out, "element edge {n_edges}\nproperty int vertex1\nproperty int vertex2\n");
    }
    out.push_str("end_header\n");
    for (pts, [r, g, b]) in [(points, RECON_COLOR), (gt, GT_COLOR)] {
        for p in pts {
            let _ = writeln!(out, "{} {} {} {r} {g} {b}", p.x, p.y, p.z);
        }
    }
    for i in 0..n_edges {
        let _ = writeln!(out, "{} {}", i, points.len() + i);
    }
    out
}

/// Orthographic scatter of both point sets on one coordinate plane.
pub fn to_svg(points: &[Point3], gt: Option<&[Point3]>, view: View) -> String {
    const SIZE: f64 = 600.0;
    const MARGIN: f64 = 30.0;
    let (a, b) = view.axes();
    let gt = gt.unwrap_or(&[]);
    let all = points.iter().chain(gt);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for (k, axis) in [a, b].into_iter().enumerate() {
            lo[k] = lo[k].min(p[axis]);
            hi[k] = hi[k].max(p[axis]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let map = |p: &Point3| (MARGIN + (p[a] - lo[0]) * scale, SIZE - MARGIN - (p[b] - lo[1]) * scale);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (p, q) in points.iter().zip(gt) {
        let ((x1, y1), (x2, y2)) = (map(p), map(q));
        let _ = writeln!(
            out,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"black\" stroke-width=\"0.5\"/>"
        );
    }
    for (pts, [r, g, bl]) in [(gt, GT_COLOR), (points, RECON_COLOR)] {
        for p in pts {
            let (x, y) = map(p);
            let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"rgb({r},{g},{bl})\"/>");
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn to_csv(points: &[Point3], gt: Option<&[Point3]>) -> String {
    let mut out = String::new();
    match gt {
        Some(gt) => {
            out.push_str("index,x,y,z,gt_x,gt_y,gt_z\n");
            for (i, (p, q)) in points.iter().zip(gt).enumerate() {
                let _ = writeln!(out, "{i},{},{},{},{},{},{}", p.x, p.y, p.z, q.x, q.y, q.z);
            }
        }
        None => {
            out.push_str("index,x,y,z\n");
            for (i, p) in points.iter().enumerate() {
                let _ = writeln!(out, "{i},{},{},{}", p.x, p.y, p.z);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(n: usize, z: f64) -> Vec<Point3> {
        (0..n).map(|i| Point3::new(i as f64 * 0.1, 1.0 - i as f64, z)).collect()
    }

    fn header_count(ply: &str, element: &str) -> Option<usize> {
        ply.lines()
            .find_map(|l| l.strip_prefix(&format!("element {element} ")))
            .map(|n| n.parse().unwrap())
    }

    #[test]
    fn ply_with_gt_has_pairs() {
        let ply = to_ply(&pts(5, 2.0), Some(&pts(5, 2.5)));
        assert_eq!(header_count(&ply, "vertex"), Some(10));
        assert_eq!(header_count(&ply, "edge"), Some(5));
        let body: Vec<&str> = ply.split("end_header\n").nth(1).unwrap().lines().collect();
        assert_eq!(body.len(), 15);
        assert_eq!(body[10], "0 5");
        assert!(body[0].ends_with("220 60 40"));
        assert!(body[5].ends_with("40 90 220"));
    }

    #[test]
    fn ply_without_gt_has_no_edges() {
        let ply = to_ply(&pts(4, 1.0), None);
        assert_eq!(header_count(&ply, "vertex"), Some(4));
        assert_eq!(header_count(&ply, "edge"), None);
        assert_eq!(ply.split("end_header\n").nth(1).unwrap().lines().count(), 4);
    }

    #[test]
    fn svg_and_csv_shapes() {
        let svg = to_svg(&pts(3, 1.0), Some(&pts(3, 1.2)), View::Xz);
        assert_eq!(svg.matches("<circle").count(), 6);
        assert_eq!(svg.matches("<line").count(), 3);
        let csv = to_csv(&pts(3, 1.0), None);
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().nth(1), Some("0,0,1,1"));
    }
}
