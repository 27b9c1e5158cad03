use super::{
    derive_seed, generate_extending, CampaignError, CampaignResult, CampaignSettings, Core, EngineKind, Mutator,
    Observer, SaveReason,
};
use crate::coverage::CoverageRecorder;
use crate::gen::Generator;
use crate::outcome::RunResult;
use crate::param::{ExtensionStream, ParameterSequence, DEFAULT_MAX_SEQUENCE_LEN};
use crate::targets::{execute, Target};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coverage-guided fuzzing over raw input octets.
///
/// Same sweep and mutation as Zest, but the mutated bytes are the input
/// itself, and only new total coverage counts.
pub fn cgf_campaign(
    target: &dyn Target,
    seeds: &[Vec<u8>],
    settings: &CampaignSettings,
    observer: &mut dyn Observer,
) -> Result<CampaignResult, CampaignError> {
    settings.validate()?;
    if seeds.is_empty() {
        return Err(CampaignError::Config("cgf needs at least one seed input".into()));
    }
    if seeds.iter().any(Vec::is_empty) {
        return Err(CampaignError::Config("seed inputs must not be empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.mutation.rng_seed);
    let mutator = Mutator::new(&settings.mutation);
    let mut core = Core::new(EngineKind::Cgf, target, settings, observer);

    for seed in seeds {
        if core.exhausted() {
            break;
        }
        let executed = core.execute(None, seed, seed)?;
        if executed.outcome.result != RunResult::Failure {
            core.save(&executed, SaveReason::Initial, None, seed.clone(), seed.clone())?;
        }
    }
    if core.corpus().is_empty() && !core.exhausted() {
        return Err(CampaignError::Config("every seed input fails; nothing to mutate".into()));
    }

    'search: while !core.exhausted() {
        let sweep = core.corpus().len();
        for i in 0..sweep {
            let entry = core.corpus().get(i).expect("index within sweep");
            let (parent, parent_data, candidates) = (entry.id, entry.data.clone(), entry.num_candidates());
            for _ in 0..candidates {
                if core.exhausted() {
                    break 'search;
                }
                let bytes = mutator.mutate(&parent_data, &mut rng).bytes;
                let executed = core.execute(Some(parent), &bytes, &bytes)?;
                if executed.outcome.result != RunResult::Failure && !executed.new_total.is_empty() {
                    core.save(&executed, SaveReason::NewTotalCoverage, Some(parent), bytes.clone(), bytes)?;
                }
            }
        }
    }
    core.finish()
}

/// Random samples tried by [`generated_seed`] before giving up.
pub const SEED_SEARCH_LIMIT: u64 = 1_000_000;

/// The first VALID input found by random sampling from `generator`.
///
/// Used as the single seed input for CGF when no seed files are given.
pub fn generated_seed(target: &dyn Target, generator: &dyn Generator, seed: u64) -> Result<Vec<u8>, CampaignError> {
    let mut stream = ExtensionStream::new(derive_seed(seed, 0x7365_6564));
    let mut recorder = CoverageRecorder::new();
    for i in 0..SEED_SEARCH_LIMIT {
        let mut seq = ParameterSequence::empty(i);
        let Some(input) = generate_extending(generator, &mut seq, &mut stream, DEFAULT_MAX_SEQUENCE_LEN)? else {
            continue;
        };
        if execute(target, &input.text, &mut recorder).result == RunResult::Valid {
            return Ok(input.text);
        }
    }
    Err(CampaignError::Config(format!(
        "no valid input among {SEED_SEARCH_LIMIT} samples from the `{}` generator",
        generator.name()
    )))
}
