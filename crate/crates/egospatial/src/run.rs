//! Multi-threaded dataset generation with output identical to the
//! sequential path.

use egospatial_core::scene::Scene;
use egospatial_core::synth::{cells, generate_cell, generate_scenes, GenConfig, SynthError};
use egospatial_core::TaskRecord;

/// Generate every (task, domain) cell on up to `threads` threads.
///
/// Cells are independent and seeded by their coordinates, so the result is
/// the same for any thread count; cells are concatenated in [`cells`] order.
pub fn generate_dataset(
    config: &GenConfig,
    scenes: &[Scene],
    threads: usize,
) -> Result<Vec<TaskRecord>, SynthError> {
    config.validate()?;
    let cells = cells();
    let threads = threads.clamp(1, cells.len());
    let mut slots: Vec<Option<Result<Vec<TaskRecord>, SynthError>>> =
        (0..cells.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        for (w, chunk) in slots.chunks_mut(cells.len().div_ceil(threads)).enumerate() {
            let base = w * cells.len().div_ceil(threads);
            let cells = &cells;
            s.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let (task, domain) = cells[base + i];
                    *slot = Some(generate_cell(config, scenes, task, domain));
                }
            });
        }
    });
    let mut out = Vec::new();
    for slot in slots {
        out.extend(slot.expect("every cell ran")?);
    }
    Ok(out)
}

/// Scenes for a run, generated from its seed.
pub fn scenes_for(config: &GenConfig) -> Result<Vec<Scene>, SynthError> {
    generate_scenes(config.seed, 2 * config.scenes_per_domain, &config.scene)
}
