//! Doubly-spread channels: path models, the time-domain channel, the effective
//! delay-Doppler filter and the matrix forms of the input-output relations.

pub mod effective;
pub mod matrices;
pub mod paths;

pub use effective::{
    effective_dd_filter, effective_dd_filter_on, effective_dd_filter_td_oracle, window_cross_correlation, EffectiveDDFilter, Provenance,
    TapWindow,
};
pub use matrices::{
    build_hdd, build_hfd, build_hfd_banded, build_htd, build_htd_banded, BandedMatrix, IOMatrix, IoKind, ZakOperator, DEFAULT_TF_GUARD,
};
pub use paths::{apply_td_channel, resolvable_5path, two_path, veh_a, veh_a_variant, Path, PathChannel, TdSeries, VehAVariant};
