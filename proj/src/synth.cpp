#include <myoshape/synth.hpp>

#include <cmath>

#include <myoshape/geometry.hpp>
#include <myoshape/rng.hpp>

namespace myoshape::synth {

void SynthConfig::require_valid() const {
    if (n_cases < 1) throw InvalidInputError("SynthConfig: n_cases < 1");
    if (n_endo < 6) throw InvalidInputError("SynthConfig: n_endo < 6");
    if (!(epi_radius_mm > endo_radius_mm) || !(endo_radius_mm > 0.0))
        throw InvalidInputError("SynthConfig: need epi radius > endo radius > 0");
    for (const auto& amps : {endo_amp_mm, epi_amp_mm})
        for (double a : amps)
            if (a < 0.0) throw InvalidInputError("SynthConfig: negative amplitude");
    if (noise_sd_mm < 0.0) throw InvalidInputError("SynthConfig: negative noise");
    if (min_margin_mm < 0.0) throw InvalidInputError("SynthConfig: negative margin");
}

namespace {

struct Harmonics {
    std::array<double, 6> amp;    // drawn per case
    std::array<double, 6> phase;  // fixed per population
    double base;

    double radius(double phi) const {
        double r = base;
        for (int k = 0; k < 6; ++k)
            r += amp[k] * std::cos((k + 1) * phi + phase[k]);
        return r;
    }
};

}  // namespace

std::vector<SynthCase> generate_population(const SynthConfig& cfg) {
    cfg.require_valid();
    const double px = cfg.grid.pixel_size_mm;

    // Population-level phases: fixed per seed so each (ring, order) pair
    // contributes a single linear degree of freedom.
    Rng pop_rng(Rng::derive_seed(cfg.seed, 0));
    std::array<double, 6> endo_phase, epi_phase;
    for (int k = 0; k < 6; ++k) {
        endo_phase[k] = pop_rng.uniform(0.0, 2.0 * M_PI);
        epi_phase[k] = pop_rng.uniform(0.0, 2.0 * M_PI);
    }

    std::vector<SynthCase> out;
    out.reserve(cfg.n_cases);
    for (int c = 0; c < cfg.n_cases; ++c) {
        Rng rng(Rng::derive_seed(cfg.seed, 1 + c));
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            Harmonics endo{{}, endo_phase, cfg.endo_radius_mm};
            Harmonics epi{{}, epi_phase, cfg.epi_radius_mm};
            for (int k = 0; k < 6; ++k) {
                endo.amp[k] = rng.uniform(-cfg.endo_amp_mm[k], cfg.endo_amp_mm[k]);
                epi.amp[k] = rng.uniform(-cfg.epi_amp_mm[k], cfg.epi_amp_mm[k]);
            }

            // Landmarks in the pose-normalized frame; index 0 at angle 0.
            LandmarkSet s;
            s.n_endo = cfg.n_endo;
            s.pts.resize(2 * cfg.n_endo);
            bool margin_ok = true;
            for (int i = 0; i < cfg.n_endo; ++i) {
                const double phi = 2.0 * M_PI * i / cfg.n_endo;
                const double re = endo.radius(phi) +
                                  rng.normal(0.0, cfg.noise_sd_mm);
                const double rp = epi.radius(phi) +
                                  rng.normal(0.0, cfg.noise_sd_mm);
                if (rp - re < cfg.min_margin_mm || re <= 0.0) margin_ok = false;
                s.pts[i] = {re / px * std::cos(phi), re / px * std::sin(phi)};
                s.pts[cfg.n_endo + i] = {rp / px * std::cos(phi),
                                         rp / px * std::sin(phi)};
            }
            // Dense margin check between the harmonic curves (pre-jitter).
            for (int j = 0; j < 360 && margin_ok; ++j) {
                const double phi = 2.0 * M_PI * j / 360.0;
                if (epi.radius(phi) - endo.radius(phi) < cfg.min_margin_mm)
                    margin_ok = false;
            }
            if (!margin_ok) continue;

            Pose pose;
            const Point gc = cfg.grid.center();
            pose.center = {gc.x + rng.uniform(-cfg.center_range_mm, cfg.center_range_mm) / px,
                           gc.y + rng.uniform(-cfg.center_range_mm, cfg.center_range_mm) / px};
            pose.theta = rng.uniform(-cfg.theta_range_rad, cfg.theta_range_rad);

            SynthCase sc;
            sc.pose = pose;
            sc.landmarks = geometry::pose_denormalize(s, pose);
            out.push_back(std::move(sc));
            ok = true;
        }
        if (!ok)
            throw InfeasibleConfigError(
                "generate_population: case " + std::to_string(c) +
                " violates topology after 100 retries");
    }
    return out;
}

CaseBundle make_case_bundle(const SynthCase& c, const ShapeModel& model,
                            const GridSpec& spec, int n_modes) {
    CaseBundle b;
    b.landmarks = c.landmarks;
    b.pose = c.pose;
    const LandmarkSet normalized = geometry::pose_normalize(c.landmarks, c.pose);
    b.b = shape_model::project(model, normalized, n_modes);
    const Contour endo = geometry::spline_contour(b.landmarks.endo_ring());
    const Contour epi = geometry::spline_contour(b.landmarks.epi_ring());
    b.distance = raster::distance_map(endo, epi, spec);
    b.mask = raster::binarize(b.distance);
    return b;
}

}  // namespace myoshape::synth
