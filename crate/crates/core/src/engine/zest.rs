use super::{
    generate_extending, CampaignError, CampaignResult, CampaignSettings, Core, EngineKind, Mutator, Observer,
    SaveReason,
};
use crate::gen::Generator;
use crate::outcome::RunResult;
use crate::param::{ExtensionStream, ParameterSequence};
use crate::targets::Target;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Feedback-directed search over parameter sequences.
///
/// Starts from one random sequence, then sweeps the corpus repeatedly,
/// mutating each entry `num_candidates` times. A candidate is saved when
/// it adds total coverage, or when it is valid and adds valid coverage.
/// Failing candidates are recorded but never saved for mutation.
pub fn zest_campaign(
    target: &dyn Target,
    generator: &dyn Generator,
    settings: &CampaignSettings,
    observer: &mut dyn Observer,
) -> Result<CampaignResult, CampaignError> {
    settings.validate()?;
    generator.config().validate()?;
    let mut stream = ExtensionStream::new(settings.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.mutation.rng_seed);
    let mutator = Mutator::new(&settings.mutation);
    let cap = settings.max_sequence_len;
    let mut core = Core::new(EngineKind::Zest, target, settings, observer);

    while core.corpus().is_empty() && !core.exhausted() {
        let mut seq = ParameterSequence::empty(core.next_index());
        let Some(input) = generate_extending(generator, &mut seq, &mut stream, cap)? else {
            core.discard()?;
            continue;
        };
        let executed = core.execute(None, seq.bytes(), &input.text)?;
        if executed.outcome.result != RunResult::Failure {
            core.save(&executed, SaveReason::Initial, None, seq.into_bytes(), input.text)?;
        }
    }

    'search: while !core.exhausted() {
        let sweep = core.corpus().len();
        for i in 0..sweep {
            let entry = core.corpus().get(i).expect("index within sweep");
            let (parent, parent_data, candidates) = (entry.id, entry.data.clone(), entry.num_candidates());
            if parent_data.is_empty() {
                continue;
            }
            for _ in 0..candidates {
                if core.exhausted() {
                    break 'search;
                }
                let mutation = mutator.mutate(&parent_data, &mut rng);
                let mut seq = ParameterSequence::new(core.next_index(), mutation.bytes);
                let Some(input) = generate_extending(generator, &mut seq, &mut stream, cap)? else {
                    core.discard()?;
                    continue;
                };
                let executed = core.execute(Some(parent), seq.bytes(), &input.text)?;
                if executed.outcome.result == RunResult::Failure {
                    continue;
                }
                let reason = if !executed.new_valid.is_empty() {
                    SaveReason::NewValidCoverage
                } else if !executed.new_total.is_empty() {
                    SaveReason::NewTotalCoverage
                } else {
                    continue;
                };
                core.save(&executed, reason, Some(parent), seq.into_bytes(), input.text)?;
            }
        }
    }
    core.finish()
}
