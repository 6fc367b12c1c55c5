//! Sequence datasets for influence learning and their newline-delimited JSON
//! file format: a header line with the dimensions and the source spec, then one
//! JSON record per episode.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gac::{GacGlobalSim, GacInfluenceSource, GacLocalState};
use crate::gtc::{GtcGlobalSim, GtcInfluenceSource, GtcLocalState};
use crate::ials::LocalDomain;
use crate::rng::RngStream;
use crate::sim::{ActionId, GenerativeSimulator, StepResult};

/// A global simulator that can expose the local projection of its state and
/// the influence-source value realized at each step.
pub trait TracedGlobalSim: GenerativeSimulator {
    type Local: Clone;
    type Source: Clone;

    fn local_of(&self, state: &Self::State) -> Self::Local;

    fn step_with_source(
        &self,
        state: &Self::State,
        action: ActionId,
        rng: &mut RngStream,
    ) -> (StepResult<Self::State>, Self::Source);
}

impl TracedGlobalSim for GacGlobalSim {
    type Local = GacLocalState;
    type Source = GacInfluenceSource;

    fn local_of(&self, state: &Self::State) -> bool {
        state.obtained[0]
    }

    fn step_with_source(
        &self,
        state: &Self::State,
        action: ActionId,
        rng: &mut RngStream,
    ) -> (StepResult<Self::State>, GacInfluenceSource) {
        let mut rng_agent = RngStream::new(rng.next_u64());
        let (res, trace) = self.step_traced(state, action, rng, &mut rng_agent);
        (res, trace.source)
    }
}

impl TracedGlobalSim for GtcGlobalSim {
    type Local = GtcLocalState;
    type Source = GtcInfluenceSource;

    fn local_of(&self, state: &Self::State) -> GtcLocalState {
        state.intersections[self.center_index()]
    }

    fn step_with_source(
        &self,
        state: &Self::State,
        action: ActionId,
        rng: &mut RngStream,
    ) -> (StepResult<Self::State>, GtcInfluenceSource) {
        self.step_traced(state, action, rng)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub inputs: Vec<Vec<f64>>,
    /// Source bits per step, 0/1.
    pub targets: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub bits: usize,
    pub domain: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub input_width: usize,
    pub seq_len: usize,
    pub source_spec: SourceSpec,
}

#[derive(Debug, Clone)]
pub struct InfluenceDataset {
    pub header: DatasetHeader,
    pub episodes: Vec<EpisodeRecord>,
}

impl InfluenceDataset {
    pub fn input_width(&self) -> usize {
        self.header.input_width
    }

    pub fn seq_len(&self) -> usize {
        self.header.seq_len
    }

    pub fn source_bits(&self) -> usize {
        self.header.source_spec.bits
    }

    /// First 80% of the episodes train, the rest validate.
    pub fn split(&self) -> (&[EpisodeRecord], &[EpisodeRecord]) {
        let n_train = self.episodes.len() * 8 / 10;
        self.episodes.split_at(n_train)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &self.header)?;
        writeln!(w)?;
        for ep in &self.episodes {
            serde_json::to_writer(&mut w, ep)?;
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn load(path: &Path) -> std::io::Result<InfluenceDataset> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "empty dataset file"))??;
        let header: DatasetHeader = serde_json::from_str(&header_line)?;
        let mut episodes = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ep: EpisodeRecord = serde_json::from_str(&line)?;
            if ep.inputs.len() != header.seq_len
                || ep.targets.len() != header.seq_len
                || ep.inputs.iter().any(|v| v.len() != header.input_width)
                || ep.targets.iter().any(|v| v.len() != header.source_spec.bits)
            {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    "episode record does not match dataset header",
                ));
            }
            episodes.push(ep);
        }
        Ok(InfluenceDataset { header, episodes })
    }
}

/// Roll episodes with a uniform random policy and record, for `t = 1..H-1`,
/// the input `(a_{t-1}, x_t)` and the source value realized at step `t`. The
/// initial local state `x_0` is dropped so the input width stays constant.
pub fn collect_dataset<G, D>(
    global: &G,
    codec: &D,
    domain_tag: &str,
    n_episodes: usize,
    horizon: usize,
    rng: &RngStream,
) -> InfluenceDataset
where
    G: TracedGlobalSim,
    D: LocalDomain<LocalState = G::Local, Source = G::Source>,
{
    assert!(horizon >= 2, "horizon must be at least 2 to produce records");
    let seq_len = horizon - 1;
    let mut episodes = Vec::with_capacity(n_episodes);
    let mut bits = Vec::new();
    for ep in 0..n_episodes {
        let mut ep_rng = rng.fork(ep as u64);
        let mut state = global.sample_initial(&mut ep_rng);
        let mut inputs = Vec::with_capacity(seq_len);
        let mut targets = Vec::with_capacity(seq_len);
        let mut prev_action = ActionId(ep_rng.below(global.action_count()));
        // Step t = 0 only warms up the environment; its source value is part of
        // the initial belief, not a prediction target.
        let (res, _) = global.step_with_source(&state, prev_action, &mut ep_rng);
        state = res.next_state;
        for _t in 1..horizon {
            let x_t = global.local_of(&state);
            let mut input = Vec::new();
            codec.encode_input(prev_action, &x_t, &mut input);
            let action = ActionId(ep_rng.below(global.action_count()));
            let (res, source) = global.step_with_source(&state, action, &mut ep_rng);
            codec.source_to_bits(&source, &mut bits);
            inputs.push(input);
            targets.push(bits.iter().map(|&b| b as u8).collect());
            state = res.next_state;
            prev_action = action;
        }
        episodes.push(EpisodeRecord { inputs, targets });
    }
    InfluenceDataset {
        header: DatasetHeader {
            input_width: codec.input_width(),
            seq_len,
            source_spec: SourceSpec { bits: codec.source_bits(), domain: domain_tag.to_string() },
        },
        episodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gac::GacConfig;
    use crate::ials::GacDomain;

    #[test]
    fn gac_dataset_shape() {
        let cfg = GacConfig::new(5);
        let global = GacGlobalSim::new(cfg.clone());
        let codec = GacDomain::new(cfg);
        let rng = RngStream::new(1);
        let ds = collect_dataset(&global, &codec, "gac", 50, 10, &rng);
        assert_eq!(ds.episodes.len(), 50);
        assert!(ds.episodes.iter().all(|e| e.inputs.len() == 9 && e.targets.len() == 9));
        assert_eq!(ds.input_width(), 3);
        assert_eq!(ds.source_bits(), 2);
    }

    #[test]
    fn first_recorded_source_marginal() {
        // After one step each neighbor has visited exactly one side, so the
        // policy is still in its cold-start uniform regime at t = 1.
        let cfg = GacConfig::new(5);
        let global = GacGlobalSim::new(cfg.clone());
        let codec = GacDomain::new(cfg);
        let rng = RngStream::new(2);
        let ds = collect_dataset(&global, &codec, "gac", 10_000, 3, &rng);
        let mean = ds.episodes.iter().map(|e| e.targets[0][0] as f64).sum::<f64>()
            / ds.episodes.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "t=1 contest_left marginal {mean}");
    }

    #[test]
    fn collect_is_deterministic() {
        let cfg = GacConfig::new(5);
        let global = GacGlobalSim::new(cfg.clone());
        let codec = GacDomain::new(cfg);
        let a = collect_dataset(&global, &codec, "gac", 5, 10, &RngStream::new(7));
        let b = collect_dataset(&global, &codec, "gac", 5, 10, &RngStream::new(7));
        for (x, y) in a.episodes.iter().zip(&b.episodes) {
            assert_eq!(x.inputs, y.inputs);
            assert_eq!(x.targets, y.targets);
        }
    }

    #[test]
    fn save_load_roundtrip() {
        let cfg = GacConfig::new(5);
        let global = GacGlobalSim::new(cfg.clone());
        let codec = GacDomain::new(cfg);
        let ds = collect_dataset(&global, &codec, "gac", 8, 10, &RngStream::new(3));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.ndjson");
        ds.save(&path).unwrap();
        let back = InfluenceDataset::load(&path).unwrap();
        assert_eq!(back.episodes.len(), 8);
        assert_eq!(back.episodes[3].inputs, ds.episodes[3].inputs);
        assert_eq!(back.episodes[3].targets, ds.episodes[3].targets);
    }
}
