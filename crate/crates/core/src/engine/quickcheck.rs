use super::{generate_extending, CampaignError, CampaignResult, CampaignSettings, Core, EngineKind, Observer};
use crate::gen::Generator;
use crate::param::{ExtensionStream, ParameterSequence};
use crate::targets::Target;

/// Random sampling: every input comes from a fresh random sequence.
/// Nothing is saved and nothing is mutated.
pub fn quickcheck_campaign(
    target: &dyn Target,
    generator: &dyn Generator,
    settings: &CampaignSettings,
    observer: &mut dyn Observer,
) -> Result<CampaignResult, CampaignError> {
    settings.validate()?;
    generator.config().validate()?;
    let mut stream = ExtensionStream::new(settings.seed);
    let mut core = Core::new(EngineKind::QuickCheck, target, settings, observer);
    while !core.exhausted() {
        let mut seq = ParameterSequence::empty(core.next_index());
        match generate_extending(generator, &mut seq, &mut stream, settings.max_sequence_len)? {
            Some(input) => {
                core.execute(None, seq.bytes(), &input.text)?;
            }
            None => core.discard()?,
        }
    }
    core.finish()
}
