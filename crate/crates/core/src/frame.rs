//! Binned photon-count recordings and the fiber lookup table.
//!
//! Recording file layout (all integers little-endian):
//!
//! ```text
//! "CRPE"              4 bytes magic
//! version             u32 (= 1)
//! width, height       u16, u16
//! sample_period_ns    u32 (> 0)
//! frame_count         u64 (> 0)
//! metadata            u32 byte length + UTF-8 JSON object of string pairs
//! frames              frame_count * width * height u16 counts, row-major
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CRPE";
pub const FORMAT_VERSION: u32 = 1;
/// 1.5 µs, i.e. 667 kHz frame rate.
pub const DEFAULT_SAMPLE_PERIOD_NS: u32 = 1500;
pub const DEFAULT_WIDTH: usize = 32;
pub const DEFAULT_HEIGHT: usize = 32;
pub const DEFAULT_FIBERS: usize = 12;

/// One sample bin of the whole array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhotonFrame {
    width: usize,
    height: usize,
    counts: Vec<u16>,
}

impl PhotonFrame {
    pub fn new(width: usize, height: usize, counts: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::shape("frame dimensions must be positive"));
        }
        if width * height != counts.len() {
            return Err(Error::shape(format!(
                "frame {width}x{height} needs {} counts, got {}",
                width * height,
                counts.len()
            )));
        }
        Ok(PhotonFrame {
            width,
            height,
            counts,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        PhotonFrame {
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn counts_mut(&mut self) -> &mut [u16] {
        &mut self.counts
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.counts[row * self.width + col]
    }
}

/// Fixed-size part of the file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordingHeader {
    pub width: u16,
    pub height: u16,
    pub sample_period_ns: u32,
    pub frame_count: u64,
}

impl RecordingHeader {
    pub fn sample_period(&self) -> f64 {
        self.sample_period_ns as f64 * 1e-9
    }

    fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// A time-ordered run of frames at a fixed sample period.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonRecording {
    frames: Vec<PhotonFrame>,
    sample_period_ns: u32,
    pub metadata: BTreeMap<String, String>,
}

impl PhotonRecording {
    pub fn new(
        frames: Vec<PhotonFrame>,
        sample_period_ns: u32,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let rec = PhotonRecording {
            frames,
            sample_period_ns,
            metadata,
        };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<()> {
        if self.sample_period_ns == 0 {
            return Err(Error::InvalidRecording("sample period must be positive".into()));
        }
        let Some(first) = self.frames.first() else {
            return Err(Error::EmptyRecording);
        };
        if first.width > u16::MAX as usize || first.height > u16::MAX as usize {
            return Err(Error::InvalidRecording("frame dimensions exceed 16 bits".into()));
        }
        if let Some((i, f)) = self
            .frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.width != first.width || f.height != first.height)
        {
            return Err(Error::InvalidRecording(format!(
                "frame {i} is {}x{}, expected {}x{}",
                f.width, f.height, first.width, first.height
            )));
        }
        Ok(())
    }

    pub fn frames(&self) -> &[PhotonFrame] {
        &self.frames
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn sample_period_ns(&self) -> u32 {
        self.sample_period_ns
    }

    /// Sample period in seconds.
    pub fn sample_period(&self) -> f64 {
        self.sample_period_ns as f64 * 1e-9
    }

    /// Frame count times sample period.
    pub fn integration_time(&self) -> f64 {
        self.frames.len() as f64 * self.sample_period()
    }

    pub fn header(&self) -> RecordingHeader {
        RecordingHeader {
            width: self.width() as u16,
            height: self.height() as u16,
            sample_period_ns: self.sample_period_ns,
            frame_count: self.frames.len() as u64,
        }
    }
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Streaming writer; the frame count is fixed up front so the header never
/// needs rewriting.
pub struct RecordingWriter {
    out: BufWriter<File>,
    header: RecordingHeader,
    written: u64,
    path: PathBuf,
    scratch: Vec<u8>,
}

impl RecordingWriter {
    pub fn create(
        path: &Path,
        header: RecordingHeader,
        metadata: &BTreeMap<String, String>,
    ) -> Result<Self> {
        if header.sample_period_ns == 0 {
            return Err(Error::InvalidRecording("sample period must be positive".into()));
        }
        if header.frame_count == 0 {
            return Err(Error::EmptyRecording);
        }
        if header.width == 0 || header.height == 0 {
            return Err(Error::InvalidRecording("frame dimensions must be positive".into()));
        }
        let mut out = BufWriter::with_capacity(1 << 20, File::create(path)?);
        let meta = serde_json::to_vec(metadata)?;
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&header.width.to_le_bytes())?;
        out.write_all(&header.height.to_le_bytes())?;
        out.write_all(&header.sample_period_ns.to_le_bytes())?;
        out.write_all(&header.frame_count.to_le_bytes())?;
        out.write_all(&(meta.len() as u32).to_le_bytes())?;
        out.write_all(&meta)?;
        Ok(RecordingWriter {
            out,
            header,
            written: 0,
            path: path.to_path_buf(),
            scratch: Vec::new(),
        })
    }

    /// Appends one frame given as row-major counts.
    pub fn write_counts(&mut self, counts: &[u16]) -> Result<()> {
        if counts.len() != self.header.frame_len() {
            return Err(Error::shape(format!(
                "frame has {} counts, header expects {}",
                counts.len(),
                self.header.frame_len()
            )));
        }
        if self.written == self.header.frame_count {
            return Err(Error::InvalidRecording(format!(
                "more frames than the declared {}",
                self.header.frame_count
            )));
        }
        self.scratch.clear();
        self.scratch.reserve(counts.len() * 2);
        for &c in counts {
            self.scratch.extend_from_slice(&c.to_le_bytes());
        }
        self.out.write_all(&self.scratch)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.header.frame_count {
            return Err(Error::InvalidRecording(format!(
                "{} of {} declared frames written to {}",
                self.written,
                self.header.frame_count,
                self.path.display()
            )));
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Streaming reader over a recording file.
pub struct RecordingReader {
    input: BufReader<File>,
    header: RecordingHeader,
    metadata: BTreeMap<String, String>,
    read: u64,
    path: PathBuf,
    buf: Vec<u8>,
}

impl RecordingReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = audit::open(path)?;
        let mut input = BufReader::with_capacity(1 << 20, file);
        let corrupt = |reason: &str| Error::Corrupt {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut fixed = [0u8; 4 + 4 + 2 + 2 + 4 + 8 + 4];
        read_full(&mut input, &mut fixed).map_err(|e| match e {
            ReadErr::Eof => format_err("file too short for a recording header"),
            ReadErr::Io(e) => Error::Io(e),
        })?;
        if &fixed[0..4] != MAGIC {
            return Err(format_err("bad magic, not a recording file"));
        }
        let version = u32::from_le_bytes(fixed[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(format_err(format!("unsupported format version {version}")));
        }
        let header = RecordingHeader {
            width: u16::from_le_bytes(fixed[8..10].try_into().unwrap()),
            height: u16::from_le_bytes(fixed[10..12].try_into().unwrap()),
            sample_period_ns: u32::from_le_bytes(fixed[12..16].try_into().unwrap()),
            frame_count: u64::from_le_bytes(fixed[16..24].try_into().unwrap()),
        };
        if header.sample_period_ns == 0 {
            return Err(format_err("sample period is zero"));
        }
        if header.width == 0 || header.height == 0 {
            return Err(format_err("frame dimensions are zero"));
        }
        if header.frame_count == 0 {
            return Err(Error::EmptyRecording);
        }
        let meta_len = u32::from_le_bytes(fixed[24..28].try_into().unwrap()) as usize;
        let mut meta = vec![0u8; meta_len];
        read_full(&mut input, &mut meta).map_err(|e| match e {
            ReadErr::Eof => corrupt("truncated metadata block"),
            ReadErr::Io(e) => Error::Io(e),
        })?;
        let metadata: BTreeMap<String, String> = if meta_len == 0 {
            BTreeMap::new()
        } else {
            let text = std::str::from_utf8(&meta).map_err(|_| corrupt("metadata is not UTF-8"))?;
            serde_json::from_str(text).map_err(|_| corrupt("metadata is not a string map"))?
        };
        Ok(RecordingReader {
            input,
            header,
            metadata,
            read: 0,
            path: path.to_path_buf(),
            buf: Vec::new(),
        })
    }

    pub fn header(&self) -> RecordingHeader {
        self.header
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn frames_remaining(&self) -> u64 {
        self.header.frame_count - self.read
    }

    /// Reads the next frame into `counts` (resized to width·height).
    /// Returns `Ok(false)` once all declared frames were read; at that
    /// point trailing bytes are reported as corruption.
    pub fn read_into(&mut self, counts: &mut Vec<u16>) -> Result<bool> {
        if self.read == self.header.frame_count {
            let mut probe = [0u8; 1];
            return match self.input.read(&mut probe)? {
                0 => Ok(false),
                _ => Err(Error::Corrupt {
                    path: self.path.clone(),
                    reason: "trailing bytes after the declared frames".into(),
                }),
            };
        }
        let len = self.header.frame_len();
        self.buf.resize(len * 2, 0);
        read_full(&mut self.input, &mut self.buf).map_err(|e| match e {
            ReadErr::Eof => Error::Corrupt {
                path: self.path.clone(),
                reason: format!(
                    "declares {} frames but ends inside frame {}",
                    self.header.frame_count, self.read
                ),
            },
            ReadErr::Io(e) => Error::Io(e),
        })?;
        counts.clear();
        counts.extend(
            self.buf
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]])),
        );
        self.read += 1;
        Ok(true)
    }
}

enum ReadErr {
    Eof,
    Io(std::io::Error),
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> std::result::Result<(), ReadErr> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            ReadErr::Eof
        } else {
            ReadErr::Io(e)
        }
    })
}

pub fn load_recording(path: &Path) -> Result<PhotonRecording> {
    let mut reader = RecordingReader::open(path)?;
    let h = reader.header();
    let (w, ht) = (h.width as usize, h.height as usize);
    let mut frames = Vec::with_capacity(h.frame_count.min(1 << 20) as usize);
    let mut counts = Vec::new();
    while reader.read_into(&mut counts)? {
        frames.push(PhotonFrame {
            width: w,
            height: ht,
            counts: counts.clone(),
        });
    }
    PhotonRecording::new(frames, h.sample_period_ns, reader.metadata.clone())
}

pub fn save_recording(rec: &PhotonRecording, path: &Path) -> Result<()> {
    rec.validate()?;
    let mut w = RecordingWriter::create(path, rec.header(), &rec.metadata)?;
    for f in &rec.frames {
        w.write_counts(&f.counts)?;
    }
    w.finish()
}

/// Serialized form of a fiber map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberMapDoc {
    pub fibers: Vec<FiberDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberDoc {
    pub id: usize,
    /// `[row, col]` pairs.
    pub pixels: Vec<[u32; 2]>,
}

impl FiberMapDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&audit::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fiber {
    pub id: usize,
    /// Row-major pixel indices, in document order.
    pub pixels: Vec<usize>,
}

impl Fiber {
    /// Q_p, the number of pixels fed by this fiber.
    pub fn q(&self) -> usize {
        self.pixels.len()
    }
}

/// Validated fiber → pixel-set lookup table. Fibers are kept sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberMap {
    width: usize,
    height: usize,
    fibers: Vec<Fiber>,
}

/// Checks a fiber map document against frame dimensions.
pub fn resolve_fiber_map(doc: &FiberMapDoc, dims: (usize, usize)) -> Result<FiberMap> {
    let (width, height) = dims;
    let mut owner: HashMap<usize, usize> = HashMap::new();
    let mut ids = BTreeSet::new();
    let mut fibers = Vec::with_capacity(doc.fibers.len());
    for f in &doc.fibers {
        if !ids.insert(f.id) {
            return Err(Error::DuplicateFiber(f.id));
        }
        if f.pixels.is_empty() {
            return Err(Error::EmptyFiber(f.id));
        }
        let mut pixels = Vec::with_capacity(f.pixels.len());
        for &[row, col] in &f.pixels {
            if row as usize >= height || col as usize >= width {
                return Err(Error::PixelOutOfBounds {
                    fiber: f.id,
                    row,
                    col,
                    width,
                    height,
                });
            }
            let idx = row as usize * width + col as usize;
            if let Some(&prev) = owner.get(&idx) {
                return Err(Error::FiberOverlap {
                    row,
                    col,
                    first: prev,
                    second: f.id,
                });
            }
            owner.insert(idx, f.id);
            pixels.push(idx);
        }
        fibers.push(Fiber { id: f.id, pixels });
    }
    if fibers.is_empty() {
        return Err(Error::config("fiber map lists no fibers"));
    }
    fibers.sort_by_key(|f| f.id);
    Ok(FiberMap {
        width,
        height,
        fibers,
    })
}

impl FiberMap {
    /// Ring layout: `fibers` square blocks of `block`×`block` pixels spaced
    /// evenly on a circle around the array center, fiber 0 at 3 o'clock and
    /// ids increasing counter-clockwise.
    pub fn ring(width: usize, height: usize, fibers: usize, block: usize) -> Result<Self> {
        Self::resolve(&Self::ring_doc(width, height, fibers, block), (width, height))
    }

    pub fn ring_doc(width: usize, height: usize, fibers: usize, block: usize) -> FiberMapDoc {
        let cx = (width as f64 - block as f64) / 2.0;
        let cy = (height as f64 - block as f64) / 2.0;
        let radius = cx.min(cy) - 1.0;
        let docs = (0..fibers)
            .map(|p| {
                let angle = 2.0 * std::f64::consts::PI * p as f64 / fibers as f64;
                let col0 = (cx + radius * angle.cos()).round().max(0.0) as u32;
                let row0 = (cy - radius * angle.sin()).round().max(0.0) as u32;
                let pixels = (0..block as u32)
                    .flat_map(|dr| (0..block as u32).map(move |dc| [row0 + dr, col0 + dc]))
                    .collect();
                FiberDoc { id: p, pixels }
            })
            .collect();
        FiberMapDoc { fibers: docs }
    }

    /// 12 fibers × 16 pixels on a 32×32 array.
    pub fn default_ring() -> Self {
        Self::ring(DEFAULT_WIDTH, DEFAULT_HEIGHT, DEFAULT_FIBERS, 4)
            .expect("default ring layout is valid")
    }

    pub fn resolve(doc: &FiberMapDoc, dims: (usize, usize)) -> Result<Self> {
        resolve_fiber_map(doc, dims)
    }

    pub fn to_doc(&self) -> FiberMapDoc {
        FiberMapDoc {
            fibers: self
                .fibers
                .iter()
                .map(|f| FiberDoc {
                    id: f.id,
                    pixels: f
                        .pixels
                        .iter()
                        .map(|&i| [(i / self.width) as u32, (i % self.width) as u32])
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    pub fn fiber_count(&self) -> usize {
        self.fibers.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Σ_p Q_p.
    pub fn covered_pixels(&self) -> usize {
        self.fibers.iter().map(Fiber::q).sum()
    }

    pub fn q_per_fiber(&self) -> Vec<usize> {
        self.fibers.iter().map(Fiber::q).collect()
    }

    /// All mapped pixel indices, fiber-major.
    pub fn mapped_pixels(&self) -> Vec<usize> {
        self.fibers.iter().flat_map(|f| f.pixels.iter().copied()).collect()
    }

    /// Pixel index → position of its fiber in [`FiberMap::fibers`].
    pub fn owner_table(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.width * self.height];
        for (slot, f) in self.fibers.iter().enumerate() {
            for &px in &f.pixels {
                owner[px] = Some(slot);
            }
        }
        owner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_recording(frames: usize) -> PhotonRecording {
        let frames = (0..frames)
            .map(|t| {
                let counts = (0..32 * 32).map(|i| ((i * 7 + t * 3) % 5) as u16).collect();
                PhotonFrame::new(32, 32, counts).unwrap()
            })
            .collect();
        let mut meta = BTreeMap::new();
        meta.insert("tissue".to_string(), "tissue-II".to_string());
        meta.insert("label".to_string(), "3".to_string());
        PhotonRecording::new(frames, DEFAULT_SAMPLE_PERIOD_NS, meta).unwrap()
    }

    #[test]
    fn two_frame_file_has_expected_size_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.crpe");
        let rec = small_recording(2);
        save_recording(&rec, &path).unwrap();
        let meta_len = serde_json::to_vec(&rec.metadata).unwrap().len() as u64;
        let size = std::fs::metadata(&path).unwrap().len();
        assert_eq!(size, 28 + meta_len + 2048 * 2);
        let back = load_recording(&path).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.frames().len(), 2);
        assert!((back.integration_time() - 3e-6).abs() < 1e-15);
    }

    #[test]
    fn max_count_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.crpe");
        let mut counts = vec![0u16; 6];
        counts[4] = 65535;
        let rec = PhotonRecording::new(
            vec![PhotonFrame::new(3, 2, counts).unwrap()],
            1500,
            BTreeMap::new(),
        )
        .unwrap();
        save_recording(&rec, &path).unwrap();
        assert_eq!(load_recording(&path).unwrap().frames()[0].get(1, 1), 65535);
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.crpe");
        save_recording(&small_recording(10), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 2048]).unwrap();
        assert!(matches!(load_recording(&path), Err(Error::Corrupt { .. })));
        // Partial last frame as well.
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_recording(&path), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn trailing_bytes_are_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.crpe");
        save_recording(&small_recording(2), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0, 0]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_recording(&path), Err(Error::Corrupt { .. })));
    }

    fn patch_and_load(offset: usize, patch: &[u8]) -> Result<PhotonRecording> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.crpe");
        save_recording(&small_recording(2), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[offset..offset + patch.len()].copy_from_slice(patch);
        std::fs::write(&path, &bytes).unwrap();
        load_recording(&path)
    }

    #[test]
    fn header_violations() {
        assert!(matches!(patch_and_load(0, b"CRPX"), Err(Error::Format(_))));
        assert!(matches!(patch_and_load(4, &2u32.to_le_bytes()), Err(Error::Format(_))));
        assert!(matches!(patch_and_load(12, &0u32.to_le_bytes()), Err(Error::Format(_))));
        assert!(matches!(
            patch_and_load(16, &0u64.to_le_bytes()),
            Err(Error::EmptyRecording)
        ));
    }

    #[test]
    fn mismatched_frames_rejected_before_write() {
        let frames = vec![PhotonFrame::zeros(32, 32), PhotonFrame::zeros(16, 32)];
        let rec = PhotonRecording {
            frames,
            sample_period_ns: 1500,
            metadata: BTreeMap::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.crpe");
        assert!(matches!(
            save_recording(&rec, &path),
            Err(Error::InvalidRecording(_))
        ));
        assert!(!path.exists());
    }

    #[test]
    fn frame_shape_checked() {
        assert!(PhotonFrame::new(4, 4, vec![0; 15]).is_err());
        assert!(PhotonRecording::new(vec![], 1500, BTreeMap::new()).is_err());
        assert!(PhotonRecording::new(vec![PhotonFrame::zeros(2, 2)], 0, BTreeMap::new()).is_err());
    }

    fn grid_doc(fibers: usize, per: usize) -> FiberMapDoc {
        FiberMapDoc {
            fibers: (0..fibers)
                .map(|p| FiberDoc {
                    id: p,
                    pixels: (0..per).map(|k| [p as u32, k as u32]).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn twelve_by_sixteen_map() {
        let map = resolve_fiber_map(&grid_doc(12, 16), (32, 32)).unwrap();
        assert_eq!(map.fiber_count(), 12);
        assert!(map.q_per_fiber().iter().all(|&q| q == 16));
        assert_eq!(map.covered_pixels(), 192);
    }

    #[test]
    fn overlapping_pixels_rejected() {
        let doc = FiberMapDoc {
            fibers: vec![
                FiberDoc {
                    id: 0,
                    pixels: vec![[3, 4], [0, 0]],
                },
                FiberDoc {
                    id: 1,
                    pixels: vec![[1, 1], [3, 4]],
                },
            ],
        };
        let err = resolve_fiber_map(&doc, (32, 32)).unwrap_err();
        assert!(matches!(err, Error::FiberOverlap { row: 3, col: 4, .. }), "{err}");
    }

    #[test]
    fn out_of_bounds_and_duplicates_rejected() {
        let doc = FiberMapDoc {
            fibers: vec![FiberDoc {
                id: 0,
                pixels: vec![[32, 0]],
            }],
        };
        assert!(matches!(
            resolve_fiber_map(&doc, (32, 32)),
            Err(Error::PixelOutOfBounds { .. })
        ));
        let doc = FiberMapDoc {
            fibers: vec![
                FiberDoc {
                    id: 2,
                    pixels: vec![[0, 0]],
                },
                FiberDoc {
                    id: 2,
                    pixels: vec![[0, 1]],
                },
            ],
        };
        assert!(matches!(
            resolve_fiber_map(&doc, (32, 32)),
            Err(Error::DuplicateFiber(2))
        ));
    }

    #[test]
    fn json_document_parses() {
        let text = r#"{"fibers":[{"id":1,"pixels":[[0,1],[0,2]]},{"id":0,"pixels":[[5,5]]}]}"#;
        let map = FiberMap::resolve(&FiberMapDoc::from_json(text).unwrap(), (8, 8)).unwrap();
        assert_eq!(map.fibers()[0].id, 0);
        assert_eq!(map.fibers()[1].pixels, vec![1, 2]);
        assert_eq!(FiberMap::resolve(&map.to_doc(), (8, 8)).unwrap(), map);
    }

    #[test]
    fn default_ring_is_disjoint() {
        let map = FiberMap::default_ring();
        assert_eq!(map.fiber_count(), 12);
        assert_eq!(map.covered_pixels(), 192);
        let distinct: BTreeSet<_> = map.mapped_pixels().into_iter().collect();
        assert_eq!(distinct.len(), 192);
    }
}
