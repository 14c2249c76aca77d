//! Node geometry and Rayleigh block-fading channel gains.
//!
//! Every link coefficient is drawn as `h ~ CN(0, d^-2)`, i.e. real and
//! imaginary parts are independent `N(0, d^-2 / 2)`. Downstream code only
//! ever sees the power gain `|h|^2`, which is exponential with mean `d^-2`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Node separations below this are rejected; `d^-2` is unbounded at zero.
pub const MIN_DISTANCE_M: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexGain {
    pub re: f64,
    pub im: f64,
}

impl ComplexGain {
    pub fn power_gain(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Power gains seen by one secondary user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSet {
    /// PT -> ST_i
    pub g_ps: f64,
    /// ST_i -> PR
    pub g_sp: f64,
    /// ST_i -> SR_i
    pub g_ss: f64,
    /// ST_i -> ED
    pub g_se: f64,
}

impl ChannelSet {
    pub fn new(g_ps: f64, g_sp: f64, g_ss: f64, g_se: f64) -> Result<Self> {
        let ch = ChannelSet {
            g_ps,
            g_sp,
            g_ss,
            g_se,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, g) in [
            ("g_ps", self.g_ps),
            ("g_sp", self.g_sp),
            ("g_ss", self.g_ss),
            ("g_se", self.g_se),
        ] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::domain(what, g, "finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Transmitter/receiver pair of one secondary user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuPlacement {
    pub st: Position,
    pub sr: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub pt: Position,
    pub pr: Position,
    pub ed: Position,
    pub sus: Vec<SuPlacement>,
}

fn check_distance(distance: f64) -> Result<()> {
    if distance.is_nan() || distance < MIN_DISTANCE_M {
        return Err(Error::GeometrySingularity {
            distance,
            min: MIN_DISTANCE_M,
        });
    }
    Ok(())
}

/// Draws one `CN(0, d^-2)` coefficient.
///
/// Both components are unit normals scaled by `1/(d*sqrt(2))`, so two calls
/// with identically seeded streams at different distances return the same
/// underlying draw rescaled. Scenario sweeps rely on this for common random
/// numbers.
pub fn sample_gain<R: Rng + ?Sized>(distance: f64, rng: &mut R) -> Result<ComplexGain> {
    check_distance(distance)?;
    let scale = (0.5_f64).sqrt() / distance;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Ok(ComplexGain {
        re: re * scale,
        im: im * scale,
    })
}

/// Samples the four links of every secondary user, in SU order and in the
/// fixed per-SU order PT->ST, ST->PR, ST->SR, ST->ED.
pub fn build_channels<R: Rng + ?Sized>(topo: &Topology, rng: &mut R) -> Result<Vec<ChannelSet>> {
    // Validate every distance first so an error never leaves the stream half consumed.
    let mut links = Vec::with_capacity(topo.sus.len());
    for su in &topo.sus {
        let d = [
            topo.pt.distance_to(&su.st),
            su.st.distance_to(&topo.pr),
            su.st.distance_to(&su.sr),
            su.st.distance_to(&topo.ed),
        ];
        for &di in &d {
            check_distance(di)?;
        }
        links.push(d);
    }
    links
        .iter()
        .map(|d| {
            Ok(ChannelSet {
                g_ps: sample_gain(d[0], rng)?.power_gain(),
                g_sp: sample_gain(d[1], rng)?.power_gain(),
                g_ss: sample_gain(d[2], rng)?.power_gain(),
                g_se: sample_gain(d[3], rng)?.power_gain(),
            })
        })
        .collect()
}
