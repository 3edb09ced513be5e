#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include <myoshape/fit.hpp>
#include <myoshape/geometry.hpp>
#include <myoshape/gradcheck.hpp>
#include <myoshape/io.hpp>
#include <myoshape/metrics.hpp>
#include <myoshape/quant.hpp>
#include <myoshape/raster.hpp>
#include <myoshape/report.hpp>
#include <myoshape/synth.hpp>

namespace fs = std::filesystem;
using namespace myoshape;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitUsage = 64;

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag,
                           std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("MYOSHAPE_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return v;
        throw InvalidInputError("MYOSHAPE_SEED is not an integer");
    }
    return fallback;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void emit_manifest(const fs::path& out_dir, const std::string& command,
                   std::vector<std::string> inputs, const json& config,
                   std::uint64_t seed) {
    io::RunManifest m;
    m.command = command;
    m.inputs = std::move(inputs);
    m.config_hash = io::config_hash_hex(config.dump());
    m.seed = seed;
    m.version = kVersion;
    m.timestamp_utc = utc_timestamp();
    io::write_manifest(out_dir, m);
}

/// Runs fn(i) for i in [0, n) across up to `jobs` threads; the first
/// exception wins and is rethrown on the caller thread.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<std::string> case_stems(const fs::path& dir,
                                    const std::string& suffix) {
    if (!fs::is_directory(dir))
        throw InvalidInputError("not a directory: " + dir.string());
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            stems.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(stems.begin(), stems.end());
    return stems;
}

// Minimal CSV table reader: header plus string cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw InvalidInputError("csv: no column '" + name + "'");
    }
};

std::vector<std::string> split_csv_line(const std::string& s) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (t.header.empty()) t.header = split_csv_line(line);
        else t.rows.push_back(split_csv_line(line));
    }
    if (t.header.empty()) throw IoError("csv: empty file " + path.string());
    return t;
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

int cmd_model_build(const fs::path& shapes_dir, double pixel_size,
                    const fs::path& out) {
    const auto stems = case_stems(shapes_dir, ".landmarks.csv");
    if (stems.size() < 2)
        throw InvalidInputError("model build: need at least 2 landmark files in " +
                                shapes_dir.string());
    std::vector<LandmarkSet> shapes;
    for (const auto& stem : stems) {
        const LandmarkSet p =
            io::read_landmarks(shapes_dir / (stem + ".landmarks.csv"));
        const Pose pose = io::read_pose(shapes_dir / (stem + ".pose.json"));
        shapes.push_back(geometry::pose_normalize(p, pose));
    }
    io::write_model(out, shape_model::build_model(shapes, pixel_size));
    return kExitOk;
}

int cmd_model_variance(const fs::path& model_path, int m_modes) {
    const ShapeModel model = io::read_model(model_path);
    std::cout << fmt(shape_model::explained_variance(model, m_modes)) << "\n";
    return kExitOk;
}

int cmd_model_sample(const fs::path& model_path, int mode, double sd,
                     const std::optional<fs::path>& pose_path,
                     const fs::path& out) {
    const ShapeModel model = io::read_model(model_path);
    if (mode < 0 || mode > model.n_modes())
        throw InvalidInputError("model sample: mode out of range");
    ShapeCoeffs b = ShapeCoeffs::Zero(mode);
    if (mode > 0) b[mode - 1] = sd;
    LandmarkSet p = shape_model::reconstruct(model, b);
    if (pose_path) p = geometry::pose_denormalize(p, io::read_pose(*pose_path));
    io::write_landmarks(out, p);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const std::optional<fs::path>& config_path, const fs::path& out_dir,
              std::optional<std::uint64_t> seed_flag, int jobs) {
    synth::SynthConfig cfg;
    if (config_path) cfg = io::read_synth_config(*config_path);
    cfg.seed = resolve_seed(seed_flag, cfg.seed);
    cfg.require_valid();

    fs::create_directories(out_dir);
    const auto pop = synth::generate_population(cfg);

    parallel_for(static_cast<int>(pop.size()), jobs, [&](int i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "case_%04d", i);
        const auto& c = pop[static_cast<size_t>(i)];
        io::write_landmarks(out_dir / (std::string(stem) + ".landmarks.csv"),
                            c.landmarks);
        io::write_pose(out_dir / (std::string(stem) + ".pose.json"), c.pose);
        const ScalarGrid d = raster::distance_map(
            geometry::spline_contour(c.landmarks.endo_ring()),
            geometry::spline_contour(c.landmarks.epi_ring()), cfg.grid);
        io::write_grid(out_dir / (std::string(stem) + ".sdg"), d);
        io::write_mask(out_dir / (std::string(stem) + ".pgm"), raster::binarize(d));
    });

    emit_manifest(out_dir, "synth",
                  config_path ? std::vector<std::string>{config_path->string()}
                              : std::vector<std::string>{},
                  json::parse(io::synth_config_to_json(cfg)), cfg.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// rasterize
// ---------------------------------------------------------------------------

int cmd_rasterize(const fs::path& landmarks_path, const GridSpec& spec,
                  const std::optional<fs::path>& out_grid,
                  const std::optional<fs::path>& out_mask,
                  const std::optional<fs::path>& out_soft, double alpha) {
    const LandmarkSet p = io::read_landmarks(landmarks_path);
    const ScalarGrid d =
        raster::distance_map(geometry::spline_contour(p.endo_ring()),
                             geometry::spline_contour(p.epi_ring()), spec);
    if (out_grid) io::write_grid(*out_grid, d);
    if (out_mask) io::write_mask(*out_mask, raster::binarize(d));
    if (out_soft) io::write_grid(*out_soft, raster::soft_mask(d, alpha));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

int cmd_fit(const fs::path& target, const fs::path& model_path,
            const std::optional<fs::path>& weights_path, const fs::path& out,
            const std::optional<fs::path>& prior_pose_path, int iters, int modes,
            double tol, std::optional<std::uint64_t> seed_flag) {
    const ShapeModel model = io::read_model(model_path);
    fit::FitConfig cfg;
    cfg.max_iters = iters;
    cfg.n_modes = modes;
    cfg.tol = tol;
    cfg.seed = resolve_seed(seed_flag, 0);
    if (prior_pose_path) cfg.pose_prior = io::read_pose(*prior_pose_path);

    fit::FitResult res;
    const std::string ext = target.extension().string();
    if (ext == ".csv") {
        if (weights_path) cfg.weights = io::read_weights(*weights_path);
        res = fit::fit_to_landmarks(io::read_landmarks(target), model, cfg);
    } else if (ext == ".sdg") {
        if (weights_path) {
            cfg.weights = io::read_weights(*weights_path);
        } else {
            // Map-fit default: contour consistency plus an orientation-only
            // prior when one is supplied.
            cfg.weights.gamma_b = cfg.weights.gamma_p = 0.0;
            cfg.weights.gamma_D = cfg.weights.gamma_co = 0.0;
            cfg.weights.gamma_cc = 1.0;
            cfg.weights.gamma_phi = cfg.pose_prior ? 1.0 : 0.0;
            cfg.weights.mu_phi = 0.0;
        }
        res = fit::fit_to_distance_map(io::read_grid(target), model, cfg);
    } else {
        throw InvalidInputError("fit: target must be a .csv landmark file or a "
                                ".sdg grid, got " + target.string());
    }
    io::atomic_write(out, io::fit_result_to_json(res));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const fs::path& pred_dir, const fs::path& truth_dir,
             const fs::path& out, int jobs) {
    const auto pred_stems = case_stems(pred_dir, ".pgm");
    const auto truth_stems = case_stems(truth_dir, ".pgm");
    std::vector<std::string> stems;
    std::set_intersection(pred_stems.begin(), pred_stems.end(),
                          truth_stems.begin(), truth_stems.end(),
                          std::back_inserter(stems));
    if (stems.empty())
        throw InvalidInputError("eval: no matching .pgm case files");

    std::vector<std::string> rows(stems.size());
    parallel_for(static_cast<int>(stems.size()), jobs, [&](int i) {
        const BinaryMask pred = io::read_mask(pred_dir / (stems[i] + ".pgm"));
        const BinaryMask truth = io::read_mask(truth_dir / (stems[i] + ".pgm"));
        const double d = metrics::dsc(pred, truth);
        double mbe = std::numeric_limits<double>::quiet_NaN();
        double hd = std::numeric_limits<double>::quiet_NaN();
        try {
            std::tie(mbe, hd) = metrics::boundary_distances(pred, truth);
        } catch (const UndefinedMetricError&) {
            // An empty mask is recorded through the flags column.
        }
        std::string flag_names;
        for (const auto f : metrics::classify_shape(pred)) {
            if (!flag_names.empty()) flag_names += ';';
            flag_names += metrics::shape_flag_name(f);
        }
        if (flag_names.empty()) flag_names = "-";
        rows[i] = stems[i] + "," + fmt(d) + "," + fmt(mbe) + "," + fmt(hd) + "," +
                  flag_names + "\n";
    });

    std::string csv = "case_id,dsc,mbe_px,hd_px,flags\n";
    for (const auto& r : rows) csv += r;
    io::atomic_write(out, csv);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// quant
// ---------------------------------------------------------------------------

std::string quant_row(const std::string& id, const quant::LVParams& v) {
    std::string row = id;
    row += "," + fmt(v.a_lv_mm2) + "," + fmt(v.a_myo_mm2);
    for (double d : v.dim_lv_mm) row += "," + fmt(d);
    for (double r : v.rwt_mm) row += "," + fmt(r);
    return row + "\n";
}

int cmd_quant(const std::optional<fs::path>& landmarks_dir,
              const std::optional<fs::path>& masks_dir,
              const std::optional<fs::path>& pose_dir, double pixel_size,
              const std::optional<fs::path>& truth_csv, const fs::path& out,
              int jobs) {
    if (!landmarks_dir && !masks_dir)
        throw InvalidInputError("quant: need --landmarks-dir or --masks-dir");
    if (masks_dir && !pose_dir)
        throw InvalidInputError("quant: --masks-dir requires --pose-dir for theta");

    std::vector<std::string> stems;
    if (landmarks_dir) stems = case_stems(*landmarks_dir, ".landmarks.csv");
    else stems = case_stems(*masks_dir, ".pgm");
    if (stems.empty()) throw InvalidInputError("quant: no case files found");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> rows(stems.size());
    parallel_for(static_cast<int>(stems.size()), jobs, [&](int i) {
        try {
            quant::LVParams v;
            if (landmarks_dir) {
                const LandmarkSet p = io::read_landmarks(
                    *landmarks_dir / (stems[i] + ".landmarks.csv"));
                v = quant::lv_params_from_landmarks(p, pixel_size);
            } else {
                const BinaryMask m = io::read_mask(*masks_dir / (stems[i] + ".pgm"));
                const Pose pose =
                    io::read_pose(*pose_dir / (stems[i] + ".pose.json"));
                v = quant::lv_params_from_mask(m, pose.theta, pixel_size);
            }
            rows[i] = quant_row(stems[i], v);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Validation) throw;
            // Unrealistic or degenerate case: keep the row, mark values nan.
            quant::LVParams bad{nan, nan, {nan, nan, nan},
                                {nan, nan, nan, nan, nan, nan}};
            rows[i] = quant_row(stems[i], bad);
        }
    });

    std::string csv =
        "case_id,a_lv_mm2,a_myo_mm2,dim1_mm,dim2_mm,dim3_mm,"
        "rwt1_mm,rwt2_mm,rwt3_mm,rwt4_mm,rwt5_mm,rwt6_mm\n";
    for (const auto& r : rows) csv += r;

    if (truth_csv) {
        const CsvTable truth = read_csv(*truth_csv);
        std::map<std::string, std::vector<double>> truth_by_id;
        for (const auto& r : truth.rows) {
            if (r[0] == "MAE" || r[0] == "RHO") continue;
            std::vector<double> vals;
            for (size_t c = 1; c < r.size(); ++c) vals.push_back(std::stod(r[c]));
            truth_by_id[r[0]] = vals;
        }
        std::string mae_row = "MAE", rho_row = "RHO";
        for (int col = 0; col < 11; ++col) {
            std::vector<double> tv, pv;
            for (size_t i = 0; i < stems.size(); ++i) {
                const auto cells = split_csv_line(rows[i]);
                const auto it = truth_by_id.find(cells[0]);
                if (it == truth_by_id.end()) continue;
                const double p = std::stod(cells[static_cast<size_t>(col) + 1]);
                if (std::isnan(p)) continue;
                tv.push_back(it->second[static_cast<size_t>(col)]);
                pv.push_back(p);
            }
            if (tv.size() >= 2) {
                const auto [mae, rho] = quant::mae_and_correlation(tv, pv);
                mae_row += "," + fmt(mae);
                rho_row += "," + fmt(rho);
            } else {
                mae_row += ",nan";
                rho_row += ",nan";
            }
        }
        csv += mae_row + "\n" + rho_row + "\n";
    }
    io::atomic_write(out, csv);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

int cmd_stats(const fs::path& a_csv, const fs::path& b_csv,
              const std::vector<std::string>& columns, int n_perm,
              std::optional<std::uint64_t> seed_flag, const fs::path& out) {
    const std::uint64_t seed = resolve_seed(seed_flag, 0);
    const CsvTable a = read_csv(a_csv);
    const CsvTable b = read_csv(b_csv);
    std::vector<std::string> cols = columns;
    if (cols.empty()) {
        for (const auto& h : a.header)
            if (h != "case_id" && h != "flags") cols.push_back(h);
    }

    std::map<std::string, std::vector<std::string>> b_by_id;
    const int b_id = b.column("case_id");
    for (const auto& r : b.rows) b_by_id[r[static_cast<size_t>(b_id)]] = r;

    std::string csv = "metric,mean,std,p_value_vs_baseline\n";
    const int a_id = a.column("case_id");
    for (const auto& col : cols) {
        const int ac = a.column(col);
        const int bc = b.column(col);
        std::vector<double> av, bv;
        for (const auto& r : a.rows) {
            const auto it = b_by_id.find(r[static_cast<size_t>(a_id)]);
            if (it == b_by_id.end()) continue;
            const double x = std::stod(r[static_cast<size_t>(ac)]);
            const double y = std::stod(it->second[static_cast<size_t>(bc)]);
            if (std::isnan(x) || std::isnan(y)) continue;
            av.push_back(x);
            bv.push_back(y);
        }
        if (av.size() < 2)
            throw InvalidInputError("stats: fewer than 2 paired cases for " + col);
        double mean = 0.0;
        for (double v : av) mean += v;
        mean /= static_cast<double>(av.size());
        double var = 0.0;
        for (double v : av) var += (v - mean) * (v - mean);
        var /= static_cast<double>(av.size() - 1);
        const double p = metrics::bootstrap_rank_test(av, bv, n_perm, seed);
        csv +=
            col + "," + fmt(mean) + "," + fmt(std::sqrt(var)) + "," + fmt(p) + "\n";
    }
    io::atomic_write(out, csv);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

int cmd_gradcheck(std::optional<std::uint64_t> seed_flag, int configs,
                  const std::optional<fs::path>& out) {
    const std::uint64_t seed = resolve_seed(seed_flag, 7);
    const auto rows = gradcheck::run(seed, configs);
    const std::string csv = gradcheck::to_csv(rows);
    if (out) io::atomic_write(*out, csv);
    else std::cout << csv;
    return gradcheck::all_pass(rows) ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const fs::path& truth_dir,
               const std::optional<fs::path>& contour_dir,
               const std::optional<fs::path>& map_dir,
               const std::optional<fs::path>& eval_csv, const fs::path& out_dir,
               const GridSpec& spec, int jobs) {
    const auto stems = case_stems(truth_dir, ".landmarks.csv");
    if (stems.empty())
        throw InvalidInputError("report: no truth landmark files in " +
                                truth_dir.string());
    fs::create_directories(out_dir);

    std::map<std::string, double> dsc_by_id;
    if (eval_csv) {
        const CsvTable t = read_csv(*eval_csv);
        const int id = t.column("case_id");
        const int d = t.column("dsc");
        for (const auto& r : t.rows)
            dsc_by_id[r[static_cast<size_t>(id)]] =
                std::stod(r[static_cast<size_t>(d)]);
    }

    parallel_for(static_cast<int>(stems.size()), jobs, [&](int i) {
        report::OverlayCase oc;
        oc.case_id = stems[i];
        oc.spec = spec;
        oc.truth = io::read_landmarks(truth_dir / (stems[i] + ".landmarks.csv"));
        if (contour_dir) {
            const fs::path f = *contour_dir / (stems[i] + ".landmarks.csv");
            if (fs::exists(f)) oc.contour = io::read_landmarks(f);
        }
        if (map_dir) {
            const fs::path f = *map_dir / (stems[i] + ".pgm");
            if (fs::exists(f)) oc.map_mask = io::read_mask(f);
        }
        const auto it = dsc_by_id.find(stems[i]);
        if (it != dsc_by_id.end()) oc.dsc = it->second;
        io::atomic_write(out_dir / (stems[i] + ".svg"), report::overlay_svg(oc));
    });

    if (eval_csv) {
        const CsvTable t = read_csv(*eval_csv);
        std::string csv = "metric,mean,std\n";
        for (const auto& col : {"dsc", "mbe_px", "hd_px"}) {
            const int c = t.column(col);
            std::vector<double> vals;
            for (const auto& r : t.rows) {
                const double v = std::stod(r[static_cast<size_t>(c)]);
                if (!std::isnan(v)) vals.push_back(v);
            }
            if (vals.empty()) {
                csv += std::string(col) + ",nan,nan\n";
                continue;
            }
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            var = vals.size() > 1 ? var / static_cast<double>(vals.size() - 1) : 0.0;
            csv += std::string(col) + "," + fmt(mean) + "," + fmt(std::sqrt(var)) +
                   "\n";
        }
        io::atomic_write(out_dir / "summary.csv", csv);
    }

    json cfg;
    cfg["truth_dir"] = truth_dir.string();
    cfg["grid"] = {{"width", spec.width},
                   {"height", spec.height},
                   {"pixel_size_mm", spec.pixel_size_mm}};
    std::vector<std::string> inputs{truth_dir.string()};
    if (contour_dir) inputs.push_back(contour_dir->string());
    if (map_dir) inputs.push_back(map_dir->string());
    if (eval_csv) inputs.push_back(eval_csv->string());
    emit_manifest(out_dir, "report", inputs, cfg, 0);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"myoshape: statistical myocardial shape model toolkit"};
    app.require_subcommand(0, 1);

    auto* model = app.add_subcommand("model", "shape model operations");
    model->require_subcommand(1);

    auto* build = model->add_subcommand("build", "build a PCA model from shapes");
    fs::path shapes_dir, model_out;
    double build_pixel_size = 2.0;
    build->add_option("--shapes", shapes_dir, "directory of landmark/pose cases")
        ->required();
    build->add_option("--out", model_out, "output model JSON")->required();
    build->add_option("--pixel-size", build_pixel_size, "pixel size in mm");

    auto* variance = model->add_subcommand("variance", "explained variance");
    fs::path variance_model;
    int variance_m = 12;
    variance->add_option("--model", variance_model, "model JSON")->required();
    variance->add_option("--m", variance_m, "number of modes");

    auto* sample = model->add_subcommand("sample", "reconstruct a mode shape");
    fs::path sample_model, sample_out;
    int sample_mode = 0;
    double sample_sd = 1.0;
    std::optional<fs::path> sample_pose;
    sample->add_option("--model", sample_model, "model JSON")->required();
    sample->add_option("--out", sample_out, "output landmarks CSV")->required();
    sample->add_option("--mode", sample_mode, "1-based mode (0 = mean shape)");
    sample->add_option("--sd", sample_sd, "standard deviations along the mode");
    sample->add_option("--pose", sample_pose, "optional pose JSON to denormalize");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic population");
    std::optional<fs::path> synth_config;
    fs::path synth_out;
    std::optional<std::uint64_t> synth_seed;
    int synth_jobs = 1;
    synth_cmd->add_option("--config", synth_config, "synth config JSON");
    synth_cmd->add_option("--out-dir", synth_out, "output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "seed override");
    synth_cmd->add_option("--jobs", synth_jobs, "parallel case workers");

    auto* rasterize = app.add_subcommand("rasterize", "landmarks to distance map");
    fs::path raster_landmarks;
    GridSpec raster_spec;
    std::optional<fs::path> raster_grid, raster_mask, raster_soft;
    double raster_alpha = 5.0;
    rasterize->add_option("--landmarks", raster_landmarks, "landmarks CSV")
        ->required();
    rasterize->add_option("--out", raster_grid, "output SDGRID distance map");
    rasterize->add_option("--mask", raster_mask, "output PGM mask");
    rasterize->add_option("--soft", raster_soft, "output SDGRID soft mask");
    rasterize->add_option("--alpha", raster_alpha, "soft binarization steepness");
    rasterize->add_option("--width", raster_spec.width, "grid width");
    rasterize->add_option("--height", raster_spec.height, "grid height");
    rasterize->add_option("--pixel-size", raster_spec.pixel_size_mm, "mm per pixel");

    auto* fit_cmd = app.add_subcommand("fit", "fit shape and pose to a target");
    fs::path fit_target, fit_model, fit_out;
    std::optional<fs::path> fit_weights, fit_prior;
    int fit_iters = 2000, fit_modes = 12;
    double fit_tol = 1e-8;
    std::optional<std::uint64_t> fit_seed;
    fit_cmd->add_option("--target", fit_target, "landmarks .csv or grid .sdg")
        ->required();
    fit_cmd->add_option("--model", fit_model, "model JSON")->required();
    fit_cmd->add_option("--out", fit_out, "output result JSON")->required();
    fit_cmd->add_option("--weights", fit_weights, "loss weights JSON");
    fit_cmd->add_option("--prior-pose", fit_prior, "pose prior JSON (map fits)");
    fit_cmd->add_option("--iters", fit_iters, "max iterations");
    fit_cmd->add_option("--modes", fit_modes, "number of shape modes");
    fit_cmd->add_option("--tol", fit_tol, "convergence tolerance");
    fit_cmd->add_option("--seed", fit_seed, "seed for random init policies");

    auto* eval_cmd = app.add_subcommand("eval", "mask metrics per case");
    fs::path eval_pred, eval_truth, eval_out;
    int eval_jobs = 1;
    eval_cmd->add_option("--pred-dir", eval_pred, "predicted masks dir")->required();
    eval_cmd->add_option("--truth-dir", eval_truth, "ground-truth masks dir")
        ->required();
    eval_cmd->add_option("--out", eval_out, "output CSV")->required();
    eval_cmd->add_option("--jobs", eval_jobs, "parallel case workers");

    auto* quant_cmd = app.add_subcommand("quant", "LV parameters per case");
    std::optional<fs::path> quant_landmarks, quant_masks, quant_poses, quant_truth;
    fs::path quant_out;
    double quant_pixel_size = 2.0;
    int quant_jobs = 1;
    quant_cmd->add_option("--landmarks-dir", quant_landmarks, "landmark cases dir");
    quant_cmd->add_option("--masks-dir", quant_masks, "mask cases dir");
    quant_cmd->add_option("--pose-dir", quant_poses, "pose dir (mask-path theta)");
    quant_cmd->add_option("--truth", quant_truth, "truth quant CSV for MAE/rho");
    quant_cmd->add_option("--out", quant_out, "output CSV")->required();
    quant_cmd->add_option("--pixel-size", quant_pixel_size, "mm per pixel");
    quant_cmd->add_option("--jobs", quant_jobs, "parallel case workers");

    auto* stats_cmd =
        app.add_subcommand("stats", "rank permutation test on metric CSVs");
    fs::path stats_a, stats_b, stats_out;
    std::vector<std::string> stats_columns;
    int stats_nperm = 100000;
    std::optional<std::uint64_t> stats_seed;
    stats_cmd->add_option("--a", stats_a, "method CSV")->required();
    stats_cmd->add_option("--b", stats_b, "baseline CSV")->required();
    stats_cmd->add_option("--out", stats_out, "output CSV")->required();
    stats_cmd->add_option("--column", stats_columns, "metric columns (default all)");
    stats_cmd->add_option("--n-perm", stats_nperm, "permutation count");
    stats_cmd->add_option("--seed", stats_seed, "permutation seed");

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference audit");
    std::optional<std::uint64_t> grad_seed;
    int grad_configs = 20;
    std::optional<fs::path> grad_out;
    grad_cmd->add_option("--seed", grad_seed, "configuration seed");
    grad_cmd->add_option("--configs", grad_configs, "configurations per loss");
    grad_cmd->add_option("--out", grad_out, "output CSV (default stdout)");

    auto* report_cmd = app.add_subcommand("report", "SVG overlays and summary");
    fs::path report_truth, report_out;
    std::optional<fs::path> report_contour, report_map, report_eval;
    GridSpec report_spec;
    int report_jobs = 1;
    report_cmd->add_option("--truth-dir", report_truth, "truth landmark dir")
        ->required();
    report_cmd->add_option("--out-dir", report_out, "output directory")->required();
    report_cmd->add_option("--contour-dir", report_contour, "fitted landmark dir");
    report_cmd->add_option("--map-dir", report_map, "predicted mask dir");
    report_cmd->add_option("--eval-csv", report_eval, "eval CSV for DSC labels");
    report_cmd->add_option("--width", report_spec.width, "grid width");
    report_cmd->add_option("--height", report_spec.height, "grid height");
    report_cmd->add_option("--pixel-size", report_spec.pixel_size_mm, "mm per pixel");
    report_cmd->add_option("--jobs", report_jobs, "parallel case workers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return kExitUsage;
    }

    try {
        if (build->parsed())
            return cmd_model_build(shapes_dir, build_pixel_size, model_out);
        if (variance->parsed()) return cmd_model_variance(variance_model, variance_m);
        if (sample->parsed())
            return cmd_model_sample(sample_model, sample_mode, sample_sd,
                                    sample_pose, sample_out);
        if (synth_cmd->parsed())
            return cmd_synth(synth_config, synth_out, synth_seed, synth_jobs);
        if (rasterize->parsed())
            return cmd_rasterize(raster_landmarks, raster_spec, raster_grid,
                                 raster_mask, raster_soft, raster_alpha);
        if (fit_cmd->parsed())
            return cmd_fit(fit_target, fit_model, fit_weights, fit_out, fit_prior,
                           fit_iters, fit_modes, fit_tol, fit_seed);
        if (eval_cmd->parsed())
            return cmd_eval(eval_pred, eval_truth, eval_out, eval_jobs);
        if (quant_cmd->parsed())
            return cmd_quant(quant_landmarks, quant_masks, quant_poses,
                             quant_pixel_size, quant_truth, quant_out, quant_jobs);
        if (stats_cmd->parsed())
            return cmd_stats(stats_a, stats_b, stats_columns, stats_nperm,
                             stats_seed, stats_out);
        if (grad_cmd->parsed())
            return cmd_gradcheck(grad_seed, grad_configs, grad_out);
        if (report_cmd->parsed())
            return cmd_report(report_truth, report_contour, report_map, report_eval,
                              report_out, report_spec, report_jobs);
    } catch (const Error& e) {
        json err;
        err["error"] = {{"type", e.type()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return e.kind() == ErrorKind::Validation ? kExitValidation : kExitNumerical;
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"type", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return kExitValidation;
    }
    std::cerr << app.help();
    return kExitUsage;
}
