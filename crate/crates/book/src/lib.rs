//! Runs every Rust snippet in the guide under `book/src` as a doctest, so
//! `cargo test -p blockworld-book` fails when the guide drifts from the API.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[cfg(doctest)]
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(scene_specs, "scene-specs.md");
chapter!(generation, "generation.md");
chapter!(navmesh, "navmesh.md");
chapter!(depth, "depth.md");
chapter!(decomposition, "decomposition.md");
chapter!(evaluation, "evaluation.md");
chapter!(datasets, "datasets.md");
chapter!(cli, "cli.md");

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
