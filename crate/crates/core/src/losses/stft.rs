//! Hann-windowed short-time Fourier transform of multi-channel audio.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_WINDOW: usize = 1024;
pub const DEFAULT_HOP: usize = 256;

/// Multi-channel audio clip (`channels x len`).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        let len = channels.first().map(Vec::len).ok_or_else(|| invalid("audio needs at least one channel"))?;
        if len == 0 {
            return Err(invalid("audio clip is empty"));
        }
        if channels.iter().any(|c| c.len() != len) {
            return Err(invalid("audio channels differ in length"));
        }
        if channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("audio sample".into()));
        }
        Ok(Self { channels, sample_rate })
    }

    pub fn stereo(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![left, right], sample_rate)
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> AudioClip {
        AudioClip {
            channels: self.channels.iter().map(|c| c.iter().map(|&x| f(x)).collect()).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// One-sided spectra (`window / 2 + 1` bins) per channel and frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub window: usize,
    pub hop: usize,
    pub channels: usize,
    pub frames: usize,
    pub bins: usize,
    data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn frame(&self, channel: usize, frame: usize) -> &[Complex64] {
        let start = (channel * self.frames + frame) * self.bins;
        &self.data[start..start + self.bins]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.data
    }

    /// Energy of the windowed frame recovered from its one-sided spectrum
    /// (Parseval, with interior bins counted twice).
    pub fn frame_energy(&self, channel: usize, frame: usize) -> f64 {
        let n = self.window;
        let spec = self.frame(channel, frame);
        let mut e = 0.0;
        for (k, c) in spec.iter().enumerate() {
            let mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
            e += c.norm_sqr() * if mirrored { 2.0 } else { 1.0 };
        }
        e / n as f64
    }
}

/// Number of full frames: `floor((len - window) / hop) + 1`.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    (len - window) / hop + 1
}

pub fn stft(clip: &AudioClip, window: usize, hop: usize) -> Result<Spectrogram> {
    if window == 0 || hop == 0 {
        return Err(invalid("window and hop must be positive"));
    }
    if hop > window {
        return Err(invalid(format!("hop {hop} exceeds window {window}")));
    }
    if clip.len() < window {
        return Err(invalid(format!("clip of {} samples is shorter than window {window}", clip.len())));
    }
    let frames = frame_count(clip.len(), window, hop);
    let bins = window / 2 + 1;
    let taper = hann(window);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window);
    let mut buf = vec![Complex64::default(); window];
    let mut data = Vec::with_capacity(clip.channels.len() * frames * bins);
    for channel in &clip.channels {
        for f in 0..frames {
            let seg = &channel[f * hop..f * hop + window];
            for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&taper) {
                *b = Complex64::new(x * w, 0.0);
            }
            fft.process(&mut buf);
            data.extend_from_slice(&buf[..bins]);
        }
    }
    Ok(Spectrogram { window, hop, channels: clip.channels.len(), frames, bins, data })
}
