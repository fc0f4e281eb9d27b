#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use gesture_core::imaging::pnm;
use gesture_core::preprocess::frame_name;
use gesture_core::ImageBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gesture<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_gesture")).args(args).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn json_lines(out: &Output) -> Vec<serde_json::Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).expect("json line")).collect()
}

pub fn write_frames(dir: &Path, frames: &[ImageBuffer]) {
    std::fs::create_dir_all(dir).unwrap();
    let ext = if frames[0].channels() == 3 { "ppm" } else { "pgm" };
    for (k, f) in frames.iter().enumerate() {
        pnm::write(dir.join(frame_name(k, ext)), f).unwrap();
    }
}

/// A bright disk moving at constant velocity over a dim noisy background.
#[derive(Clone, Copy, Debug)]
pub struct BlobScene {
    pub size: usize,
    pub radius: f64,
    pub start: (f64, f64),
    pub velocity: (f64, f64),
    pub frames: usize,
    pub seed: u64,
}

impl BlobScene {
    pub fn center(&self, t: usize) -> (f64, f64) {
        (self.start.0 + self.velocity.0 * t as f64, self.start.1 + self.velocity.1 * t as f64)
    }

    pub fn render(&self) -> Vec<ImageBuffer> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.frames)
            .map(|t| {
                let (cx, cy) = self.center(t);
                let mut data = Vec::with_capacity(self.size * self.size);
                for y in 0..self.size {
                    for x in 0..self.size {
                        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                        let v = if d2 <= self.radius * self.radius {
                            rng.random_range(180..=230)
                        } else {
                            rng.random_range(0..=80)
                        };
                        data.push(v);
                    }
                }
                ImageBuffer::from_vec(self.size, self.size, 1, data).unwrap()
            })
            .collect()
    }

    /// Square inscribed in the first-frame disk, as X,Y,W,H.
    pub fn roi(&self) -> [i64; 4] {
        let half = (self.radius / std::f64::consts::SQRT_2).floor() as i64;
        let (cx, cy) = self.start;
        [cx.round() as i64 - half, cy.round() as i64 - half, 2 * half + 1, 2 * half + 1]
    }
}

pub fn roi_arg(r: [i64; 4]) -> String {
    format!("{},{},{},{}", r[0], r[1], r[2], r[3])
}

/// Rows of a tracking CSV as `(cx, cy, converged, lost)`.
pub fn parse_track_csv(text: &str) -> Vec<(f64, f64, bool, bool)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap(), f[7] == "1", f[8] == "1")
        })
        .collect()
}
