//! DD pulse schedules: PDD, concatenated DD, nested UDD, and the two-qubit
//! variants, generated as frame-segment grids with pulse events derived from
//! the frame transitions. Finite-width square pulses are realized on top of
//! the nominal timeline.

use std::f64::consts::PI;

use thiserror::Error;

use crate::pauli::{Axis, PauliString};

const PULSE_AREA_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("pulse area inconsistent: rabi*width = {area:.12} but a pi rotation is required")]
    InconsistentArea { area: f64 },
    #[error("nested UDD order must be a positive even integer, got {n}")]
    OddOrder { n: u32 },
    #[error("schedule text is malformed: {0}")]
    Malformed(String),
}

/// One DD pulse: the ideal propagator is this (Hermitian, phase-stripped)
/// Pauli up to a global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEvent {
    pub nominal_time: f64,
    pub operator: PauliString,
    pub layer: u32,
}

/// Maximal interval over which the toggling frame is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSegment {
    pub start: f64,
    pub end: f64,
    /// Ordered product of all pulses applied before this segment, phase
    /// stripped; identity for the first segment.
    pub frame: PauliString,
}

impl FrameSegment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

/// A complete DD timeline over `[0, total_duration]` in nominal gate time:
/// the nominal axis carries the drive, and each pulse event inserts a
/// realized window of `pulse_width` at its nominal position, extending the
/// wall clock. Drive segments keep their nominal lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub qubits: usize,
    pub total_duration: f64,
    pub events: Vec<PulseEvent>,
    pub segments: Vec<FrameSegment>,
    pub pulse_width: f64,
    pub pulse_rabi: f64,
}

impl Schedule {
    /// Attach square pulses of the given width; `rabi * width` must be a pi
    /// rotation. Width 0 keeps the schedule instantaneous.
    pub fn realize_pulses(&self, pulse_width: f64, rabi: f64) -> Result<Schedule, ScheduleError> {
        assert!(pulse_width >= 0.0);
        let mut out = self.clone();
        if pulse_width == 0.0 {
            out.pulse_width = 0.0;
            out.pulse_rabi = 0.0;
            return Ok(out);
        }
        let area = rabi * pulse_width;
        if (area - PI).abs() > PULSE_AREA_TOL {
            return Err(ScheduleError::InconsistentArea { area });
        }
        out.pulse_width = pulse_width;
        out.pulse_rabi = rabi;
        Ok(out)
    }

    /// The event at the start of segment `i`, if any.
    pub fn event_at_segment_start(&self, i: usize) -> Option<&PulseEvent> {
        let t = self.segments[i].start;
        self.events.iter().find(|e| e.nominal_time == t)
    }

    /// The event at `total_duration` closing the cycle, if any.
    pub fn trailing_event(&self) -> Option<&PulseEvent> {
        self.events.iter().find(|e| e.nominal_time == self.total_duration)
    }

    /// Total drive time; the drive runs over the whole nominal timeline.
    pub fn active_total(&self) -> f64 {
        self.total_duration
    }

    /// Wall-clock duration: the nominal timeline plus all inserted pulse
    /// windows.
    pub fn wall_duration(&self) -> f64 {
        self.total_duration + self.events.len() as f64 * self.pulse_width
    }

    /// Ordered product of all pulse operators (phases included as tracked).
    pub fn net_pulse_product(&self) -> PauliString {
        let mut acc = PauliString::identity(self.qubits);
        for ev in &self.events {
            acc = ev.operator.mul(&acc);
        }
        acc
    }

    /// Line-oriented text form: header, then one line per event
    /// `t_nominal width pauli_label layer`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# ddlab schedule v1\n");
        s.push_str(&format!("qubits {}\n", self.qubits));
        s.push_str(&format!("total_duration {:e}\n", self.total_duration));
        s.push_str(&format!("pulse_rabi {:e}\n", self.pulse_rabi));
        s.push_str(&format!("events {}\n", self.events.len()));
        for ev in &self.events {
            s.push_str(&format!(
                "{:e} {:e} {} {}\n",
                ev.nominal_time,
                self.pulse_width,
                ev.operator.axes_label(),
                ev.layer
            ));
        }
        s
    }

    /// Parse the text form; segments are rebuilt from the event list.
    pub fn from_text(text: &str) -> Result<Schedule, ScheduleError> {
        let bad = |m: &str| ScheduleError::Malformed(m.to_string());
        let mut qubits: Option<usize> = None;
        let mut total: Option<f64> = None;
        let mut rabi: f64 = 0.0;
        let mut expected_events: Option<usize> = None;
        let mut events: Vec<PulseEvent> = Vec::new();
        let mut width: Option<f64> = None;

        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "qubits" if fields.len() == 2 => {
                    qubits = Some(fields[1].parse().map_err(|_| bad("bad qubits"))?);
                }
                "total_duration" if fields.len() == 2 => {
                    total = Some(fields[1].parse().map_err(|_| bad("bad total_duration"))?);
                }
                "pulse_rabi" if fields.len() == 2 => {
                    rabi = fields[1].parse().map_err(|_| bad("bad pulse_rabi"))?;
                }
                "events" if fields.len() == 2 => {
                    expected_events = Some(fields[1].parse().map_err(|_| bad("bad events"))?);
                }
                _ if fields.len() == 4 => {
                    let t: f64 = fields[0].parse().map_err(|_| bad("bad event time"))?;
                    let w: f64 = fields[1].parse().map_err(|_| bad("bad event width"))?;
                    let op = PauliString::from_axes_label(fields[2])
                        .ok_or_else(|| bad("bad pauli label"))?;
                    let layer: u32 = fields[3].parse().map_err(|_| bad("bad layer"))?;
                    match width {
                        None => width = Some(w),
                        Some(prev) if prev == w => {}
                        Some(_) => return Err(bad("event widths are not uniform")),
                    }
                    events.push(PulseEvent {
                        nominal_time: t,
                        operator: op,
                        layer,
                    });
                }
                _ => return Err(bad(&format!("unrecognized line: {line}"))),
            }
        }

        let qubits = qubits.ok_or_else(|| bad("missing qubits"))?;
        let total = total.ok_or_else(|| bad("missing total_duration"))?;
        if let Some(n) = expected_events {
            if n != events.len() {
                return Err(bad("event count does not match header"));
            }
        }
        for ev in &events {
            if ev.operator.qubits() != qubits {
                return Err(bad("event pauli has wrong qubit count"));
            }
            if !(ev.nominal_time >= 0.0 && ev.nominal_time <= total) {
                return Err(bad("event time outside [0, total_duration]"));
            }
        }
        for pair in events.windows(2) {
            if pair[1].nominal_time <= pair[0].nominal_time {
                return Err(bad("event times must be strictly increasing"));
            }
        }

        // Rebuild the frame grid from the events.
        let mut cuts = vec![0.0];
        cuts.extend(events.iter().map(|e| e.nominal_time).filter(|&t| t < total));
        cuts.push(total);
        let mut frames = vec![PauliString::identity(qubits)];
        for ev in events.iter().filter(|e| e.nominal_time < total) {
            let prev = frames.last().unwrap();
            frames.push(ev.operator.mul(prev).strip_phase());
        }
        let segments = cuts
            .windows(2)
            .zip(frames)
            .map(|(w, frame)| FrameSegment {
                start: w[0],
                end: w[1],
                frame,
            })
            .collect();

        let width = width.unwrap_or(0.0);
        let sched = Schedule {
            qubits,
            total_duration: total,
            events,
            segments,
            pulse_width: 0.0,
            pulse_rabi: 0.0,
        };
        if width > 0.0 {
            sched.realize_pulses(width, rabi)
        } else {
            Ok(sched)
        }
    }

    /// Run the structural invariants, returning one (name, result) per check.
    pub fn check_invariants(&self) -> Vec<(String, Result<(), String>)> {
        let mut out = Vec::new();

        let mut tiling = Ok(());
        if self.segments.is_empty() {
            tiling = Err("schedule has no segments".to_string());
        } else {
            if self.segments[0].start != 0.0 {
                tiling = Err("first segment does not start at 0".to_string());
            }
            if (self.segments.last().unwrap().end - self.total_duration).abs() > 1e-15 {
                tiling = Err("last segment does not end at total_duration".to_string());
            }
            for (i, pair) in self.segments.windows(2).enumerate() {
                if pair[0].end != pair[1].start {
                    tiling = Err(format!("gap or overlap between segments {} and {}", i, i + 1));
                    break;
                }
            }
            for (i, seg) in self.segments.iter().enumerate() {
                if seg.end <= seg.start {
                    tiling = Err(format!("segment {i} has non-positive length"));
                    break;
                }
            }
        }
        out.push(("segment tiling".to_string(), tiling));

        let mut frames = Ok(());
        let mut acc = PauliString::identity(self.qubits);
        let mut ev_iter = self.events.iter().peekable();
        for (i, seg) in self.segments.iter().enumerate() {
            while let Some(ev) = ev_iter.peek() {
                if ev.nominal_time <= seg.start {
                    acc = ev.operator.mul(&acc);
                    ev_iter.next();
                } else {
                    break;
                }
            }
            if acc.strip_phase() != seg.frame {
                frames = Err(format!(
                    "segment {} frame {} does not match accumulated pulse product {}",
                    i,
                    seg.frame.axes_label(),
                    acc.axes_label()
                ));
                break;
            }
        }
        out.push(("frame correctness".to_string(), frames));

        let closure = {
            let net = self.net_pulse_product();
            if net.is_identity_axes() {
                Ok(())
            } else {
                Err(format!("net pulse product is {} instead of identity", net.axes_label()))
            }
        };
        out.push(("cycle closure".to_string(), closure));

        let mut windows = Ok(());
        if self.pulse_width > 0.0 {
            let area = self.pulse_rabi * self.pulse_width;
            if (area - PI).abs() > PULSE_AREA_TOL {
                windows = Err(format!("pulse area {area} is not a pi rotation"));
            }
        }
        out.push(("pulse rotation area".to_string(), windows));

        out
    }
}

/// Assemble a schedule from a cut grid and per-segment frames. Pulse events
/// are the frame transitions; coincident layer boundaries merge automatically
/// and transitions that reduce to the identity are dropped.
fn from_frame_grid(
    qubits: usize,
    cuts: Vec<f64>,
    frames: Vec<PauliString>,
    boundary_layers: Vec<u32>,
) -> Schedule {
    assert_eq!(cuts.len(), frames.len() + 1);
    assert_eq!(boundary_layers.len(), frames.len());
    let frames: Vec<PauliString> = frames.iter().map(|f| f.strip_phase()).collect();
    assert!(frames[0].is_identity_axes(), "first frame must be identity");

    let total = *cuts.last().unwrap();
    let mut events = Vec::new();
    for i in 0..frames.len() - 1 {
        let op = frames[i + 1].mul(&frames[i]).strip_phase();
        if !op.is_identity_axes() {
            events.push(PulseEvent {
                nominal_time: cuts[i + 1],
                operator: op,
                layer: boundary_layers[i],
            });
        }
    }
    // Trailing pulse restoring the identity frame at the end of the cycle.
    let last = frames.last().unwrap();
    if !last.is_identity_axes() {
        events.push(PulseEvent {
            nominal_time: total,
            operator: last.clone(),
            layer: *boundary_layers.last().unwrap(),
        });
    }

    let segments = cuts
        .windows(2)
        .zip(frames)
        .map(|(w, frame)| FrameSegment {
            start: w[0],
            end: w[1],
            frame,
        })
        .collect();

    Schedule {
        qubits,
        total_duration: total,
        events,
        segments,
        pulse_width: 0.0,
        pulse_rabi: 0.0,
    }
}

/// Free evolution: one identity-frame segment, no pulses.
pub fn bare_schedule(total_duration: f64, qubits: usize) -> Schedule {
    assert!(total_duration > 0.0);
    from_frame_grid(
        qubits,
        vec![0.0, total_duration],
        vec![PauliString::identity(qubits)],
        vec![0],
    )
}

fn pdd_frames(qubits_each: usize) -> Vec<PauliString> {
    [Axis::I, Axis::X, Axis::Y, Axis::Z]
        .iter()
        .map(|&a| PauliString::single(qubits_each, 0, a))
        .collect()
}

/// Periodic DD over four equal intervals with frames {I, X, Y, Z}.
pub fn pdd_schedule(tau: f64) -> Schedule {
    assert!(tau > 0.0);
    let cuts = (0..=4).map(|i| i as f64 * tau).collect();
    from_frame_grid(1, cuts, pdd_frames(1), vec![0; 4])
}

fn cdd_frames_layers(levels: u32) -> (Vec<PauliString>, Vec<u32>) {
    if levels == 1 {
        return (pdd_frames(1), vec![0; 4]);
    }
    let (inner_frames, inner_layers) = cdd_frames_layers(levels - 1);
    let mut frames = Vec::with_capacity(4 * inner_frames.len());
    let mut layers = Vec::with_capacity(4 * inner_layers.len());
    for outer in pdd_frames(1) {
        for f in &inner_frames {
            frames.push(f.mul(&outer).strip_phase());
        }
        let mut sub = inner_layers.clone();
        *sub.last_mut().unwrap() = levels - 1;
        layers.extend(sub);
    }
    (frames, layers)
}

/// Concatenated DD with `levels` nested layers; level 1 is PDD.
pub fn cdd_schedule(tau: f64, levels: u32) -> Schedule {
    assert!(tau > 0.0);
    assert!(levels >= 1, "CDD needs at least one level");
    let (frames, layers) = cdd_frames_layers(levels);
    let n = frames.len();
    let total = 4.0 * tau;
    let cuts = (0..=n).map(|i| i as f64 / n as f64 * total).collect();
    from_frame_grid(1, cuts, frames, layers)
}

/// UDD pulse times `T sin^2(j pi / (2n+2))` for `j = 1..=n`.
pub fn udd_times(n: u32, total: f64) -> Vec<f64> {
    assert!(n >= 1);
    assert!(total > 0.0);
    (1..=n)
        .map(|j| {
            let s = (j as f64 * PI / (2.0 * n as f64 + 2.0)).sin();
            total * s * s
        })
        .collect()
}

/// Nested UDD of even order `n`: outer X pulses at UDD times over `[0, 4 tau]`,
/// inner Z pulses at UDD times mapped affinely into each outer interval.
pub fn nested_udd_schedule(tau: f64, n: u32) -> Result<Schedule, ScheduleError> {
    assert!(tau > 0.0);
    if n < 2 || !n.is_multiple_of(2) {
        return Err(ScheduleError::OddOrder { n });
    }
    let total = 4.0 * tau;
    let outer = udd_times(n, total);
    let fractions: Vec<f64> = (1..=n)
        .map(|k| {
            let s = (k as f64 * PI / (2.0 * n as f64 + 2.0)).sin();
            s * s
        })
        .collect();

    let mut cuts = vec![0.0];
    let mut frames = Vec::new();
    let mut layers = Vec::new();
    let x = PauliString::single(1, 0, Axis::X);
    let z = PauliString::single(1, 0, Axis::Z);

    let mut outer_frame = PauliString::identity(1);
    for j in 0..=n as usize {
        let t0 = if j == 0 { 0.0 } else { outer[j - 1] };
        let t1 = if j == n as usize { total } else { outer[j] };
        let mut inner_frame = outer_frame.clone();
        for k in 0..=n as usize {
            frames.push(inner_frame.strip_phase());
            if k < n as usize {
                cuts.push(t0 + (t1 - t0) * fractions[k]);
                layers.push(0);
                inner_frame = z.mul(&inner_frame);
            }
        }
        cuts.push(t1);
        layers.push(1);
        outer_frame = x.mul(&outer_frame);
    }
    Ok(from_frame_grid(1, cuts, frames, layers))
}

/// Base sequence for the two-qubit constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoQubitBase {
    Pdd,
    Cdd2,
    NestedUdd { n: u32 },
}

/// Two-qubit DD: every base pulse is applied to both qubits (sigma (x) sigma).
/// With `extra_layers` the base cycle is wrapped in a Z(x)I echo layer and an
/// outer I(x)X echo layer, each doubling the segment count.
pub fn two_qubit_schedule(
    tau: f64,
    base: TwoQubitBase,
    extra_layers: bool,
) -> Result<Schedule, ScheduleError> {
    assert!(tau > 0.0);
    let one_qubit = match base {
        TwoQubitBase::Pdd => pdd_schedule(tau),
        TwoQubitBase::Cdd2 => cdd_schedule(tau, 2),
        TwoQubitBase::NestedUdd { n } => nested_udd_schedule(tau, n)?,
    };
    let total = one_qubit.total_duration;

    // Recover the cut/frame/layer grid of the base and broadcast to pairs.
    let mut cuts: Vec<f64> = one_qubit.segments.iter().map(|s| s.start).collect();
    cuts.push(total);
    let mut frames: Vec<PauliString> = one_qubit
        .segments
        .iter()
        .map(|s| s.frame.broadcast_pair())
        .collect();
    let mut layers = boundary_layers_of(&one_qubit);
    let mut max_layer = layers.iter().copied().max().unwrap_or(0);

    if extra_layers {
        let zi = PauliString::from_axes(vec![Axis::Z, Axis::I]);
        let ix = PauliString::from_axes(vec![Axis::I, Axis::X]);
        for pulse in [zi, ix] {
            max_layer += 1;
            let half: Vec<f64> = cuts.iter().map(|c| c / 2.0).collect();
            let mut new_cuts = half.clone();
            new_cuts.extend(half[1..].iter().map(|c| total / 2.0 + c));
            let mut new_frames = frames.clone();
            new_frames.extend(frames.iter().map(|f| f.mul(&pulse).strip_phase()));
            let mut copy = layers.clone();
            *copy.last_mut().unwrap() = max_layer;
            let mut new_layers = copy.clone();
            new_layers.extend(copy);
            cuts = new_cuts;
            frames = new_frames;
            layers = new_layers;
        }
    }

    Ok(from_frame_grid(2, cuts, frames, layers))
}

/// Boundary layer tags of an assembled schedule, one per segment (the layer
/// of the boundary that ends it). Boundaries without a surviving event keep
/// layer 0.
fn boundary_layers_of(s: &Schedule) -> Vec<u32> {
    s.segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let t = if i + 1 < s.segments.len() {
                s.segments[i + 1].start
            } else {
                s.total_duration
            };
            let _ = seg;
            s.events
                .iter()
                .find(|e| e.nominal_time == t)
                .map(|e| e.layer)
                .unwrap_or(0)
        })
        .collect()
}
