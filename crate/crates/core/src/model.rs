//! Network geometry: points, links, instances, and random topologies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::ModelError;
use crate::rng::{stream_rng, Stream};

/// Tolerance used for floating equality comparisons on geometric quantities.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance in the plane.
pub fn distance(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// A potential transmission from `sender` to `receiver`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub id: usize,
    pub sender: Point,
    pub receiver: Point,
}

impl Link {
    pub fn length(&self) -> f64 {
        distance(self.sender, self.receiver)
    }
}

/// A set of links together with the physical constants of the channel.
///
/// Construction validates every invariant, so a held `Instance` always has
/// at least one link, contiguous ids, positive lengths, `alpha > 0`,
/// `beta >= 1` and `noise >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    links: Vec<Link>,
    alpha: f64,
    beta: f64,
    noise: f64,
}

impl Instance {
    pub fn new(links: Vec<Link>, alpha: f64, beta: f64, noise: f64) -> Result<Self, ModelError> {
        if links.is_empty() {
            return Err(ModelError::Empty);
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ModelError::Parameter(format!("alpha must be > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 1.0) {
            return Err(ModelError::Parameter(format!("beta must be >= 1, got {beta}")));
        }
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(ModelError::Parameter(format!("noise must be >= 0, got {noise}")));
        }
        for (i, link) in links.iter().enumerate() {
            if link.id != i {
                return Err(ModelError::NonContiguousId { position: i, id: link.id });
            }
            if !link.sender.is_finite() || !link.receiver.is_finite() {
                return Err(ModelError::NonFinite { id: link.id });
            }
            if link.length() <= 0.0 {
                return Err(ModelError::ZeroLength { id: link.id });
            }
        }
        Ok(Self { links, alpha, beta, noise })
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: usize) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    /// Always false: an instance holds at least one link.
    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Same geometry with a different noise floor.
    pub fn with_noise(&self, noise: f64) -> Result<Self, ModelError> {
        Self::new(self.links.clone(), self.alpha, self.beta, noise)
    }

    /// Distance from the sender of `src` to the receiver of `dst`.
    pub fn cross_distance(&self, src: usize, dst: usize) -> f64 {
        distance(self.links[src].sender, self.links[dst].receiver)
    }

    /// Serializes to the line-oriented instance format.
    ///
    /// Header `n alpha beta noise`, then one `id sx sy rx ry` line per link.
    /// Reals are written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {:.16e} {:.16e} {:.16e}", self.links.len(), self.alpha, self.beta, self.noise);
        for l in &self.links {
            let _ = writeln!(
                out,
                "{} {:.16e} {:.16e} {:.16e} {:.16e}",
                l.id, l.sender.x, l.sender.y, l.receiver.x, l.receiver.y
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(ModelError::Parse { line: 1, msg: "missing header".into() })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(ModelError::Parse {
                line: hline,
                msg: format!("header needs 4 fields `n alpha beta noise`, found {}", h.len()),
            });
        }
        let n: usize = parse_field(h[0], hline, "n")?;
        let alpha = parse_field(h[1], hline, "alpha")?;
        let beta = parse_field(h[2], hline, "beta")?;
        let noise = parse_field(h[3], hline, "noise")?;

        let mut links = Vec::with_capacity(n);
        for (lno, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(ModelError::Parse {
                    line: lno,
                    msg: format!("link record needs 5 fields `id sx sy rx ry`, found {}", f.len()),
                });
            }
            links.push(Link {
                id: parse_field(f[0], lno, "id")?,
                sender: Point::new(parse_field(f[1], lno, "sx")?, parse_field(f[2], lno, "sy")?),
                receiver: Point::new(parse_field(f[3], lno, "rx")?, parse_field(f[4], lno, "ry")?),
            });
        }
        if links.len() != n {
            return Err(ModelError::Parse {
                line: hline,
                msg: format!("header declares {n} links, found {}", links.len()),
            });
        }
        Self::new(links, alpha, beta, noise)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T, ModelError> {
    s.parse().map_err(|_| ModelError::Parse { line, msg: format!("cannot parse {name} from `{s}`") })
}

/// Ratio of the longest to the shortest link length.
pub fn length_diversity(inst: &Instance) -> f64 {
    let (min, max) =
        inst.links().iter().map(Link::length).fold((f64::INFINITY, 0.0_f64), |(lo, hi), l| (lo.min(l), hi.max(l)));
    max / min
}

/// Parameters of the random planar topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyParams {
    pub n: usize,
    pub l_min: f64,
    pub l_max: f64,
    pub side: f64,
    pub alpha: f64,
    pub beta: f64,
    pub noise: f64,
}

impl TopologyParams {
    /// The n = 200, lengths in [1, 20], alpha = 2.5, beta = 1 setup.
    pub fn reference(side: f64) -> Self {
        Self { n: 200, l_min: 1.0, l_max: 20.0, side, alpha: 2.5, beta: 1.0, noise: 0.0 }
    }
}

/// Random planar instance.
///
/// Senders are uniform in a `side x side` square, lengths uniform in
/// `[l_min, l_max]`, directions uniform in `[0, 2pi)`. Receivers may land
/// outside the square.
pub fn generate_instance(params: &TopologyParams, seed: u64) -> Result<Instance, ModelError> {
    let TopologyParams { n, l_min, l_max, side, alpha, beta, noise } = *params;
    if n == 0 {
        return Err(ModelError::Empty);
    }
    if !(l_min.is_finite() && l_min > 0.0) {
        return Err(ModelError::Parameter(format!("l_min must be > 0, got {l_min}")));
    }
    if !(l_max.is_finite() && l_max >= l_min) {
        return Err(ModelError::Parameter(format!("l_max must be >= l_min, got {l_max}")));
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(ModelError::Parameter(format!("side must be > 0, got {side}")));
    }

    let mut rng = stream_rng(seed, Stream::Topology);
    let links = (0..n)
        .map(|id| {
            let sender = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
            let len = if l_max > l_min { rng.random_range(l_min..=l_max) } else { l_min };
            let theta = rng.random::<f64>() * 2.0 * PI;
            let receiver = Point::new(sender.x + len * theta.cos(), sender.y + len * theta.sin());
            Link { id, sender, receiver }
        })
        .collect();
    Instance::new(links, alpha, beta, noise)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(id: usize, sx: f64, sy: f64, rx: f64, ry: f64) -> Link {
        Link { id, sender: Point::new(sx, sy), receiver: Point::new(rx, ry) }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Point::new(1.0, 1.0), Point::new(1.0, 1.0)), 0.0);
        assert_eq!(distance(Point::new(0.0, 0.0), Point::new(0.0, 7.0)), 7.0);
    }

    #[test]
    fn diversity_examples() {
        let equal =
            Instance::new(vec![link(0, 0.0, 0.0, 5.0, 0.0), link(1, 10.0, 0.0, 10.0, 5.0)], 2.0, 1.0, 0.0).unwrap();
        assert_eq!(length_diversity(&equal), 1.0);

        let single = Instance::new(vec![link(0, 0.0, 0.0, 0.0, 3.0)], 2.0, 1.0, 0.0).unwrap();
        assert_eq!(length_diversity(&single), 1.0);

        let extremes = Instance::new(
            vec![link(0, 0.0, 0.0, 1.0, 0.0), link(1, 50.0, 0.0, 50.0, 20.0), link(2, 90.0, 0.0, 97.0, 0.0)],
            2.5,
            1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(length_diversity(&extremes), 20.0);
    }

    #[test]
    fn reference_topology_has_200_links_in_range() {
        let inst = generate_instance(&TopologyParams::reference(100.0), 7).unwrap();
        assert_eq!(inst.len(), 200);
        for l in inst.links() {
            assert!(l.length() >= 1.0 - GEOM_EPS && l.length() <= 20.0 + GEOM_EPS);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p = TopologyParams::reference(100.0);
        let a = generate_instance(&p, 7).unwrap();
        let b = generate_instance(&p, 7).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = generate_instance(&p, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_length_range() {
        let p = TopologyParams { n: 1, l_min: 1.0, l_max: 1.0, side: 10.0, alpha: 2.0, beta: 1.0, noise: 0.0 };
        let inst = generate_instance(&p, 3).unwrap();
        assert_eq!(inst.len(), 1);
        assert!((inst.links()[0].length() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generation_rejects_nonpositive_lmin() {
        let mut p = TopologyParams::reference(100.0);
        p.l_min = 0.0;
        assert!(matches!(generate_instance(&p, 1), Err(ModelError::Parameter(_))));
        p.l_min = -1.0;
        assert!(generate_instance(&p, 1).is_err());
    }

    #[test]
    fn instance_validation() {
        assert!(matches!(Instance::new(vec![], 2.0, 1.0, 0.0), Err(ModelError::Empty)));
        let l = vec![link(0, 0.0, 0.0, 1.0, 0.0)];
        assert!(Instance::new(l.clone(), 0.0, 1.0, 0.0).is_err());
        assert!(Instance::new(l.clone(), 2.0, 0.5, 0.0).is_err());
        assert!(Instance::new(l.clone(), 2.0, 1.0, -1.0).is_err());
        assert!(matches!(
            Instance::new(vec![link(1, 0.0, 0.0, 1.0, 0.0)], 2.0, 1.0, 0.0),
            Err(ModelError::NonContiguousId { .. })
        ));
        assert!(matches!(
            Instance::new(vec![link(0, 1.0, 1.0, 1.0, 1.0)], 2.0, 1.0, 0.0),
            Err(ModelError::ZeroLength { id: 0 })
        ));
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let inst = generate_instance(&TopologyParams::reference(100.0), 11).unwrap().with_noise(1.0 / 3.0).unwrap();
        let text = inst.to_text();
        let back = Instance::from_text(&text).unwrap();
        assert_eq!(inst, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn text_parse_errors_carry_line_numbers() {
        let err = Instance::from_text("1 2 1 0\n0 0 0 1\n").unwrap_err();
        assert!(matches!(err, ModelError::Parse { line: 2, .. }), "{err:?}");
        let err = Instance::from_text("2 2 1 0\n0 0 0 1 0\n").unwrap_err();
        assert!(matches!(err, ModelError::Parse { line: 1, .. }), "{err:?}");
        let err = Instance::from_text("1 2 x 0\n0 0 0 1 0\n").unwrap_err();
        assert!(matches!(err, ModelError::Parse { line: 1, .. }), "{err:?}");
    }
}
