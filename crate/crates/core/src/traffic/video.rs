//! Streaming video: a GOP-structured frame sequence sent without retransmission.

use serde::{Deserialize, Serialize};

use super::{check, TrafficError};
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameType {
    I,
    P,
    B,
}

/// Closed GOP of `n` frames with a reference frame every `m` frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GopPattern {
    pub n: u32,
    pub m: u32,
}

impl GopPattern {
    pub fn validate(&self) -> Result<(), TrafficError> {
        check("video.gop.n", self.n as f64, self.n >= 1)?;
        check("video.gop.m", self.m as f64, self.m >= 1)
    }

    /// Type of the frame at display position `pos` within a GOP.
    pub fn frame_type(&self, pos: u32) -> FrameType {
        if pos == 0 {
            FrameType::I
        } else if pos % self.m == 0 {
            FrameType::P
        } else {
            FrameType::B
        }
    }

    /// Frame types in display order.
    pub fn display_types(&self) -> Vec<FrameType> {
        (0..self.n).map(|p| self.frame_type(p)).collect()
    }

    /// Display positions of a GOP of `len` frames in transmission order: each
    /// reference frame is sent before the B frames displayed ahead of it;
    /// trailing B frames follow the last reference.
    pub fn transmission_order(&self, len: u32) -> Vec<u32> {
        let mut order = Vec::with_capacity(len as usize);
        let mut prev_ref = 0;
        order.push(0);
        let mut r = self.m;
        while r < len {
            order.push(r);
            order.extend(prev_ref + 1..r);
            prev_ref = r;
            r += self.m;
        }
        order.extend(prev_ref + 1..len);
        order
    }

    /// Display positions of the reference frames that the frame at `pos`
    /// depends on, within a GOP of `len` frames.
    pub fn references(&self, pos: u32, len: u32) -> Vec<u32> {
        match self.frame_type(pos) {
            FrameType::I => Vec::new(),
            FrameType::P => vec![pos - self.m],
            FrameType::B => {
                let prev = pos / self.m * self.m;
                let next = prev + self.m;
                if next < len {
                    vec![prev, next]
                } else {
                    vec![prev]
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VideoModel {
    pub frame_rate: f64,
    pub gop: GopPattern,
    pub i_frame_bytes: u64,
    pub p_frame_bytes: u64,
    pub b_frame_bytes: u64,
    pub duration_s: f64,
    pub playout_delay_s: f64,
}

impl Default for VideoModel {
    fn default() -> Self {
        VideoModel {
            frame_rate: 25.0,
            gop: GopPattern { n: 12, m: 3 },
            i_frame_bytes: 25_000,
            p_frame_bytes: 10_000,
            b_frame_bytes: 4000,
            duration_s: 60.0,
            playout_delay_s: 1.0,
        }
    }
}

impl VideoModel {
    pub fn validate(&self) -> Result<(), TrafficError> {
        self.gop.validate()?;
        check("video.frame_rate", self.frame_rate, self.frame_rate > 0.0 && self.frame_rate.is_finite())?;
        check("video.duration_s", self.duration_s, self.duration_s >= 0.0 && self.duration_s.is_finite())?;
        check("video.playout_delay_s", self.playout_delay_s, self.playout_delay_s >= 0.0)?;
        for (name, b) in [
            ("video.i_frame_bytes", self.i_frame_bytes),
            ("video.p_frame_bytes", self.p_frame_bytes),
            ("video.b_frame_bytes", self.b_frame_bytes),
        ] {
            check(name, b as f64, b >= 1)?;
        }
        Ok(())
    }

    pub fn frame_bytes(&self, t: FrameType) -> u64 {
        match t {
            FrameType::I => self.i_frame_bytes,
            FrameType::P => self.p_frame_bytes,
            FrameType::B => self.b_frame_bytes,
        }
    }

    /// Whole frames in the stream.
    pub fn frame_count(&self) -> u32 {
        // The epsilon keeps e.g. 10 s at 25 fps from rounding down to 249.
        (self.duration_s * self.frame_rate + 1e-9).floor() as u32
    }
}

/// One frame as sent by the server, relative to the session start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameEmission {
    /// Display index within the stream.
    pub index: u32,
    pub gop: u32,
    /// Display position within the GOP.
    pub pos: u32,
    /// Frames in this GOP (the last GOP may be truncated).
    pub gop_len: u32,
    pub frame_type: FrameType,
    pub bytes: u64,
    pub emit: SimTime,
    pub deadline: SimTime,
}

/// Frames in transmission order, one every `1 / frame_rate` seconds. A frame
/// must arrive within `playout_delay_s` of its emission.
pub fn generate_gop_schedule(model: &VideoModel) -> Vec<FrameEmission> {
    let total = model.frame_count();
    let n = model.gop.n;
    let mut out = Vec::with_capacity(total as usize);
    let mut gop = 0;
    while gop * n < total {
        let base = gop * n;
        let len = n.min(total - base);
        for pos in model.gop.transmission_order(len) {
            let slot = out.len() as f64;
            let emit = SimTime::from_secs(slot / model.frame_rate);
            let frame_type = model.gop.frame_type(pos);
            out.push(FrameEmission {
                index: base + pos,
                gop,
                pos,
                gop_len: len,
                frame_type,
                bytes: model.frame_bytes(frame_type),
                emit,
                deadline: emit + SimTime::from_secs(model.playout_delay_s),
            });
        }
        gop += 1;
    }
    out
}
