#![no_main]

use libfuzzer_sys::fuzz_target;
use protomeas_cli::config::{
    parse_at, parse_config_text, BeamMergeParams, EnsembleParams, EntropyParams, ErrorScalingParams, Experiment,
    FrequencyParams, ProtectiveParams, TomographyParams,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = parse_config_text(text) else { return };
    let Some(params) = cfg.parameters else { return };
    let p = "parameters";
    let _ = match cfg.experiment.unwrap_or(Experiment::Protective) {
        Experiment::Protective => parse_at::<ProtectiveParams>(p, params).map(drop),
        Experiment::ErrorScaling => parse_at::<ErrorScalingParams>(p, params).map(drop),
        Experiment::Tomography => parse_at::<TomographyParams>(p, params).map(drop),
        Experiment::Entropy => parse_at::<EntropyParams>(p, params).map(drop),
        Experiment::Ensemble => parse_at::<EnsembleParams>(p, params).map(drop),
        Experiment::BeamMerge => parse_at::<BeamMergeParams>(p, params).map(drop),
        Experiment::Frequency => parse_at::<FrequencyParams>(p, params).map(drop),
    };
});
