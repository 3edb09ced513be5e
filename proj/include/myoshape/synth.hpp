#ifndef MYOSHAPE_SYNTH_HPP
#define MYOSHAPE_SYNTH_HPP

#include <array>
#include <cstdint>
#include <vector>

#include <myoshape/raster.hpp>
#include <myoshape/shape_model.hpp>
#include <myoshape/types.hpp>

namespace myoshape::synth {

/// Myocardium-like population generator: each ring radius is a fixed-phase
/// harmonic series r(phi) = base + sum_k a_k cos(k phi + psi_k) with
/// per-case uniform amplitudes, giving the population a known intrinsic
/// dimension of 12 (2 rings x 6 orders) before jitter.
struct SynthConfig {
    int n_cases = 200;
    int n_endo = 18;
    double endo_radius_mm = 20.0;
    double epi_radius_mm = 30.0;
    /// Max amplitude per harmonic order 1..6, in mm.
    std::array<double, 6> endo_amp_mm{1.0, 0.75, 0.5, 0.3, 0.2, 0.15};
    std::array<double, 6> epi_amp_mm{1.0, 0.75, 0.5, 0.3, 0.2, 0.15};
    double noise_sd_mm = 0.01;
    double center_range_mm = 40.0;  // c uniform around the grid center
    double theta_range_rad = M_PI / 2.0;
    double min_margin_mm = 2.0;     // enforced endo-epi separation
    GridSpec grid;
    std::uint64_t seed = 1;

    void require_valid() const;
};

struct SynthCase {
    LandmarkSet landmarks;  // image frame
    Pose pose;
};

/// Deterministic population; any draw violating the endo-inside-epi margin
/// is redrawn (up to 100 retries per case).
std::vector<SynthCase> generate_population(const SynthConfig& cfg);

/// Every representation of one case derived from the same landmarks.
struct CaseBundle {
    LandmarkSet landmarks;
    Pose pose;
    ShapeCoeffs b;
    ScalarGrid distance;
    BinaryMask mask;
};

CaseBundle make_case_bundle(const SynthCase& c, const ShapeModel& model,
                            const GridSpec& spec, int n_modes);

}  // namespace myoshape::synth

#endif  // MYOSHAPE_SYNTH_HPP
