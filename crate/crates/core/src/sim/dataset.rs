use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::event::{EventSimulator, EventSpec};
use super::pattern::{glyph_names, FiberGeometry, GeometrySpec, Pattern};
use crate::error::{Error, Result};
use crate::frame::{FiberMap, DEFAULT_SAMPLE_PERIOD_NS};
use crate::rng::{self, STREAM_EVENT, STREAM_ORDER};

/// Optical-property presets. The scattering values are metadata only; the
/// preset's effect on the simulation is its contrast scale.
///
/// The two source descriptions disagree on which (μs′, μa) pair belongs to
/// which tissue. `tissue-I` here carries the (0.7, 0.01) pair and the weaker
/// contrast; the opposite pairing is recorded in [`Tissue::alternate_optics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tissue {
    #[serde(rename = "tissue-I")]
    TissueI,
    #[serde(rename = "tissue-II")]
    TissueII,
}

impl Tissue {
    /// Multiplier applied to every overlap w_p.
    pub fn contrast(self) -> f64 {
        match self {
            Tissue::TissueI => 0.5,
            Tissue::TissueII => 1.0,
        }
    }

    /// (μs′, μa) in mm⁻¹.
    pub fn optics(self) -> (f64, f64) {
        match self {
            Tissue::TissueI => (0.7, 0.01),
            Tissue::TissueII => (1.2, 0.02),
        }
    }

    pub fn alternate_optics(self) -> (f64, f64) {
        match self {
            Tissue::TissueI => (1.2, 0.02),
            Tissue::TissueII => (0.7, 0.01),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Tissue::TissueI => "tissue-I",
            Tissue::TissueII => "tissue-II",
        }
    }
}

impl std::str::FromStr for Tissue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tissue-I" | "I" | "1" => Ok(Tissue::TissueI),
            "tissue-II" | "II" | "2" => Ok(Tissue::TissueII),
            other => Err(Error::config(format!("unknown tissue preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub count: usize,
    pub template: EventSpec,
}

fn default_period() -> u32 {
    DEFAULT_SAMPLE_PERIOD_NS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub tissue: Option<Tissue>,
    #[serde(default = "default_period")]
    pub sample_period_ns: u32,
    #[serde(default)]
    pub geometry: GeometrySpec,
    pub classes: Vec<ClassSpec>,
}

/// One event of a dataset, in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedEvent {
    pub event_id: u64,
    pub label: u32,
    pub seed: u64,
    /// Template with the tissue contrast folded in.
    pub spec: EventSpec,
}

impl DatasetSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DatasetSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset spec serializes")
    }

    /// Built-in presets: `letters`, `circles`, `tubes`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let classes: Vec<ClassSpec> = match name {
            "letters" => glyph_names()
                .into_iter()
                .enumerate()
                .map(|(i, g)| {
                    let mut t = EventSpec::new(Pattern::Letter { glyph: g }, i as u32);
                    t.jitter = 0.1;
                    t.flip_noise = 0.02;
                    ClassSpec { count: 200, template: t }
                })
                .collect(),
            "circles" => [(0.3, 5.0, 2.5), (0.3, 2.5, 5.0), (0.5, 5.0, 2.5), (0.5, 2.5, 5.0)]
                .into_iter()
                .enumerate()
                .map(|(i, (radius, left_khz, right_khz))| {
                    let mut t = EventSpec::new(
                        Pattern::CirclePair {
                            radius,
                            offset: 0.45,
                            left_khz,
                            right_khz,
                        },
                        i as u32,
                    );
                    t.jitter = 0.05;
                    ClassSpec { count: 200, template: t }
                })
                .collect(),
            "tubes" => {
                let speeds = [0.0, 0.7, 1.4];
                let mut out = Vec::new();
                for (i, &l) in speeds.iter().enumerate() {
                    for (j, &r) in speeds.iter().enumerate() {
                        let mut t = EventSpec::new(
                            Pattern::TubePair {
                                speed_left: l,
                                speed_right: r,
                                offset: 0.5,
                                width: 0.35,
                            },
                            (3 * i + j) as u32,
                        );
                        t.t_int = 0.2;
                        out.push(ClassSpec { count: 100, template: t });
                    }
                }
                out
            }
            other => {
                return Err(Error::config(format!(
                    "unknown preset {other:?} (letters, circles, tubes)"
                )))
            }
        };
        Ok(DatasetSpec {
            name: name.into(),
            seed,
            tissue: Some(Tissue::TissueII),
            sample_period_ns: DEFAULT_SAMPLE_PERIOD_NS,
            geometry: GeometrySpec::default(),
            classes,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let labels: BTreeSet<u32> = self.classes.iter().map(|c| c.template.label).collect();
        if labels.len() < 2 {
            return Err(Error::config(format!(
                "a dataset needs at least 2 classes, got {}",
                labels.len()
            )));
        }
        if self.classes.iter().any(|c| c.count == 0) {
            return Err(Error::config("every class needs count >= 1"));
        }
        if self.sample_period_ns == 0 {
            return Err(Error::config("sample period must be positive"));
        }
        for c in &self.classes {
            c.template.validate()?;
        }
        Ok(())
    }

    pub fn event_count(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn class_count(&self) -> usize {
        self.classes
            .iter()
            .map(|c| c.template.label)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Overrides the integration time of every class.
    pub fn with_t_int(mut self, t_int: f64) -> Self {
        for c in &mut self.classes {
            c.template.t_int = t_int;
        }
        self
    }

    /// Events in a seeded random order; event ids are positions in it.
    pub fn plan(&self) -> Result<Vec<PlannedEvent>> {
        self.validate()?;
        let contrast = self.tissue.map(Tissue::contrast).unwrap_or(1.0);
        let mut templates: Vec<&EventSpec> = self
            .classes
            .iter()
            .flat_map(|c| std::iter::repeat_n(&c.template, c.count))
            .collect();
        templates.shuffle(&mut rng::stream(self.seed, &[STREAM_ORDER]));
        Ok(templates
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let mut spec = t.clone();
                spec.contrast *= contrast;
                PlannedEvent {
                    event_id: i as u64,
                    label: t.label,
                    seed: rng::derive_seed(self.seed, &[STREAM_EVENT, i as u64]),
                    spec,
                }
            })
            .collect())
    }

    pub fn geometry(&self) -> Result<FiberGeometry> {
        self.geometry.build()
    }
}

pub fn recording_name(event_id: u64) -> String {
    format!("event_{event_id:05}.crpe")
}

pub const LABELS_FILE: &str = "labels.csv";

pub fn write_labels(path: &Path, events: &[PlannedEvent]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "event_id,label")?;
    for e in events {
        writeln!(out, "{},{}", e.event_id, e.label)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an `event_id,label` file.
pub fn read_labels(path: &Path) -> Result<Vec<(u64, u32)>> {
    let mut reader = csv::Reader::from_reader(crate::audit::open(path)?);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Format(format!("{}: expected event_id,label", path.display())));
        }
        let id = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad event id {:?}", &rec[0])))?;
        let label = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad label {:?}", &rec[1])))?;
        out.push((id, label));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub recordings: Vec<PathBuf>,
    pub labels: PathBuf,
}

/// Writes one recording per event plus `labels.csv` into `out_dir`.
pub fn generate_dataset(dspec: &DatasetSpec, map: &FiberMap, out_dir: &Path) -> Result<GeneratedDataset> {
    let events = dspec.plan()?;
    let geom = dspec.geometry()?;
    std::fs::create_dir_all(out_dir)?;
    let recordings = events
        .par_iter()
        .map(|e| {
            let sim = EventSimulator::new(&e.spec, &geom, map, e.seed, dspec.sample_period_ns)?;
            let path = out_dir.join(recording_name(e.event_id));
            sim.write_recording(&path, 4096)?;
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = out_dir.join(LABELS_FILE);
    write_labels(&labels, &events)?;
    Ok(GeneratedDataset { recordings, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_the_advertised_shape() {
        let l = DatasetSpec::preset("letters", 1).unwrap();
        assert_eq!((l.event_count(), l.class_count()), (800, 4));
        let t = DatasetSpec::preset("tubes", 1).unwrap();
        assert_eq!((t.event_count(), t.class_count()), (900, 9));
        let c = DatasetSpec::preset("circles", 1).unwrap();
        assert_eq!(c.class_count(), 4);
        assert!(DatasetSpec::preset("nope", 1).is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let mut l = DatasetSpec::preset("letters", 1).unwrap();
        l.classes.truncate(1);
        assert!(matches!(l.validate(), Err(Error::Config(_))));
        let mut z = DatasetSpec::preset("letters", 1).unwrap();
        z.classes[0].count = 0;
        assert!(z.validate().is_err());
    }

    #[test]
    fn plan_is_a_seeded_shuffle() {
        let l = DatasetSpec::preset("letters", 5).unwrap();
        let a = l.plan().unwrap();
        assert_eq!(a, l.plan().unwrap());
        let mut per_label = [0; 4];
        for e in &a {
            per_label[e.label as usize] += 1;
        }
        assert_eq!(per_label, [200; 4]);
        let first: Vec<u32> = a.iter().take(20).map(|e| e.label).collect();
        assert!(first.windows(2).any(|w| w[0] != w[1]));
        let other = DatasetSpec::preset("letters", 6).unwrap().plan().unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let text = r##"{"name":"x","seed":3,"classes":[
            {"count":2,"template":{"pattern":{"kind":"letter","glyph":"D"},"label":0}},
            {"count":1,"template":{"pattern":{"kind":"bitmap","rows":["#.",".#"]},"label":1,"tau_base":1e-4}}]}"##;
        let d = DatasetSpec::from_json(text).unwrap();
        assert_eq!(d.sample_period_ns, 1500);
        assert_eq!(d.classes[0].template.rate, 0.3);
        assert_eq!(d.classes[1].template.tau_base, 1e-4);
        assert_eq!(DatasetSpec::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn tissue_contrast_is_folded_in() {
        let mut l = DatasetSpec::preset("letters", 1).unwrap();
        l.tissue = Some(Tissue::TissueI);
        assert!(l.plan().unwrap().iter().all(|e| e.spec.contrast == 0.5));
    }
}
