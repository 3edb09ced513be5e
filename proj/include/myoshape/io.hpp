#ifndef MYOSHAPE_IO_HPP
#define MYOSHAPE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <myoshape/fit.hpp>
#include <myoshape/losses.hpp>
#include <myoshape/raster.hpp>
#include <myoshape/shape_model.hpp>
#include <myoshape/synth.hpp>
#include <myoshape/types.hpp>

namespace myoshape::io {

namespace fs = std::filesystem;

/// Writes via a temporary sibling file plus rename, so readers never see a
/// partial file.
void atomic_write(const fs::path& path, const std::string& content);

// Landmarks: CSV `ring(endo|epi),index,x_px,y_px`, endo rows first.
std::string landmarks_to_csv(const LandmarkSet& p);
LandmarkSet landmarks_from_csv(const std::string& text);
void write_landmarks(const fs::path& path, const LandmarkSet& p);
LandmarkSet read_landmarks(const fs::path& path);

// Pose: JSON {theta_rad, cx_px, cy_px}.
std::string pose_to_json(const Pose& pose);
Pose pose_from_json(const std::string& text);
void write_pose(const fs::path& path, const Pose& pose);
Pose read_pose(const fs::path& path);

// Shape model: JSON {n_endo, pixel_size_mm, mean, eigenvalues, eigenvectors}
// with eigenvectors stored column-wise.
std::string model_to_json(const ShapeModel& model);
ShapeModel model_from_json(const std::string& text);
void write_model(const fs::path& path, const ShapeModel& model);
ShapeModel read_model(const fs::path& path);

// Loss weights: JSON mirroring the LossWeights field names.
std::string weights_to_json(const losses::LossWeights& w);
losses::LossWeights weights_from_json(const std::string& text);
losses::LossWeights read_weights(const fs::path& path);

// Scalar grid: `SDGRID 1` magic, a text header line, then row-major 32-bit
// little-endian IEEE-754 values.
void write_grid(const fs::path& path, const ScalarGrid& grid);
ScalarGrid read_grid(const fs::path& path);

// Binary mask: PGM (P5), 0 background / 255 foreground.
void write_mask(const fs::path& path, const BinaryMask& mask);
BinaryMask read_mask(const fs::path& path);

// Synth config: JSON mirroring SynthConfig.
std::string synth_config_to_json(const synth::SynthConfig& cfg);
synth::SynthConfig synth_config_from_json(const std::string& text);
synth::SynthConfig read_synth_config(const fs::path& path);

// Fit result: JSON with b, pose, per-iteration trace and convergence info.
std::string fit_result_to_json(const fit::FitResult& res);
fit::FitResult fit_result_from_json(const std::string& text);

/// Run manifest written once per output directory.
struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
    std::string timestamp_utc;
};

/// FNV-1a over the canonical (sorted-key) JSON dump of a config object.
std::string config_hash_hex(const std::string& canonical_json);

void write_manifest(const fs::path& out_dir, const RunManifest& manifest);

}  // namespace myoshape::io

#endif  // MYOSHAPE_IO_HPP
