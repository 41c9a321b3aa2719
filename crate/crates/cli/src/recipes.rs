//! Recipe configs bundled with the repository.

pub const RECIPES: &[(&str, &str)] = &[
    (
        "tripod_sweep.toml",
        include_str!("../../../recipes/tripod_sweep.toml"),
    ),
    (
        "ladder_maps.toml",
        include_str!("../../../recipes/ladder_maps.toml"),
    ),
    (
        "full_validate.toml",
        include_str!("../../../recipes/full_validate.toml"),
    ),
    (
        "converge_smooth.toml",
        include_str!("../../../recipes/converge_smooth.toml"),
    ),
    (
        "smoke_transparency.toml",
        include_str!("../../../recipes/smoke_transparency.toml"),
    ),
];
