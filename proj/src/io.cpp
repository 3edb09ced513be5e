#include <myoshape/io.hpp>

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace myoshape::io {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw IoError(std::string(what) + ": malformed JSON");
    return j;
}

double get_num(const json& j, const char* key, const char* what) {
    if (!j.contains(key) || !j[key].is_number())
        throw IoError(std::string(what) + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Landmarks CSV
// ---------------------------------------------------------------------------

std::string landmarks_to_csv(const LandmarkSet& p) {
    std::ostringstream out;
    out.precision(17);
    out << "ring,index,x_px,y_px\n";
    for (int i = 0; i < p.size(); ++i) {
        const bool endo = i < p.n_endo;
        out << (endo ? "endo" : "epi") << ',' << (endo ? i : i - p.n_endo) << ','
            << p.pts[i].x << ',' << p.pts[i].y << '\n';
    }
    return out.str();
}

LandmarkSet landmarks_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<int, Point>> endo, epi;
    while (std::getline(in, line)) {
        if (line.empty() || line.rfind("ring", 0) == 0) continue;
        std::istringstream row(line);
        std::string ring, idx, xs, ys;
        if (!std::getline(row, ring, ',') || !std::getline(row, idx, ',') ||
            !std::getline(row, xs, ',') || !std::getline(row, ys, ','))
            throw IoError("landmarks csv: malformed row '" + line + "'");
        std::pair<int, Point> rec{std::stoi(idx), {std::stod(xs), std::stod(ys)}};
        if (ring == "endo") endo.push_back(rec);
        else if (ring == "epi") epi.push_back(rec);
        else throw IoError("landmarks csv: unknown ring '" + ring + "'");
    }
    if (endo.empty() || endo.size() != epi.size())
        throw IoError("landmarks csv: endo/epi ring size mismatch");
    const auto by_index = [](const auto& a, const auto& b) { return a.first < b.first; };
    std::sort(endo.begin(), endo.end(), by_index);
    std::sort(epi.begin(), epi.end(), by_index);
    LandmarkSet p;
    p.n_endo = static_cast<int>(endo.size());
    for (const auto& [i, pt] : endo) p.pts.push_back(pt);
    for (const auto& [i, pt] : epi) p.pts.push_back(pt);
    return p;
}

void write_landmarks(const fs::path& path, const LandmarkSet& p) {
    atomic_write(path, landmarks_to_csv(p));
}

LandmarkSet read_landmarks(const fs::path& path) {
    return landmarks_from_csv(read_file(path));
}

// ---------------------------------------------------------------------------
// Pose JSON
// ---------------------------------------------------------------------------

std::string pose_to_json(const Pose& pose) {
    json j;
    j["theta_rad"] = pose.theta;
    j["cx_px"] = pose.center.x;
    j["cy_px"] = pose.center.y;
    return j.dump(2) + "\n";
}

Pose pose_from_json(const std::string& text) {
    const json j = parse_json(text, "pose");
    return Pose{get_num(j, "theta_rad", "pose"),
                {get_num(j, "cx_px", "pose"), get_num(j, "cy_px", "pose")}};
}

void write_pose(const fs::path& path, const Pose& pose) {
    atomic_write(path, pose_to_json(pose));
}

Pose read_pose(const fs::path& path) { return pose_from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// Shape model JSON
// ---------------------------------------------------------------------------

std::string model_to_json(const ShapeModel& model) {
    json j;
    j["n_endo"] = model.n_endo;
    j["pixel_size_mm"] = model.pixel_size_mm;
    j["mean"] = std::vector<double>(model.mean.data(),
                                    model.mean.data() + model.mean.size());
    j["eigenvalues"] = std::vector<double>(
        model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size());
    json vecs = json::array();
    for (int m = 0; m < model.n_modes(); ++m) {
        const auto col = model.eigenvectors.col(m);
        vecs.push_back(std::vector<double>(col.data(), col.data() + col.size()));
    }
    j["eigenvectors"] = vecs;
    return j.dump(2) + "\n";
}

ShapeModel model_from_json(const std::string& text) {
    const json j = parse_json(text, "model");
    ShapeModel model;
    model.n_endo = static_cast<int>(get_num(j, "n_endo", "model"));
    model.pixel_size_mm = get_num(j, "pixel_size_mm", "model");
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    model.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    model.eigenvalues =
        Eigen::Map<const Eigen::VectorXd>(eigenvalues.data(), eigenvalues.size());
    const auto& vecs = j.at("eigenvectors");
    model.eigenvectors.resize(mean.size(), vecs.size());
    for (size_t m = 0; m < vecs.size(); ++m) {
        const auto col = vecs[m].get<std::vector<double>>();
        if (col.size() != mean.size())
            throw IoError("model: eigenvector length mismatch");
        model.eigenvectors.col(static_cast<Eigen::Index>(m)) =
            Eigen::Map<const Eigen::VectorXd>(col.data(), col.size());
    }
    if (model.eigenvalues.size() != model.eigenvectors.cols())
        throw IoError("model: eigenvalue/eigenvector count mismatch");
    return model;
}

void write_model(const fs::path& path, const ShapeModel& model) {
    atomic_write(path, model_to_json(model));
}

ShapeModel read_model(const fs::path& path) {
    return model_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Loss weights JSON
// ---------------------------------------------------------------------------

std::string weights_to_json(const losses::LossWeights& w) {
    json j;
    j["gamma_b"] = w.gamma_b;
    j["gamma_phi"] = w.gamma_phi;
    j["gamma_p"] = w.gamma_p;
    j["gamma_D"] = w.gamma_D;
    j["gamma_cc"] = w.gamma_cc;
    j["gamma_co"] = w.gamma_co;
    j["mu_phi"] = w.mu_phi;
    j["mu_D"] = w.mu_D;
    j["alpha"] = w.alpha;
    return j.dump(2) + "\n";
}

losses::LossWeights weights_from_json(const std::string& text) {
    const json j = parse_json(text, "weights");
    losses::LossWeights w;
    const auto opt = [&](const char* key, double& slot) {
        if (j.contains(key)) slot = j[key].get<double>();
    };
    opt("gamma_b", w.gamma_b);
    opt("gamma_phi", w.gamma_phi);
    opt("gamma_p", w.gamma_p);
    opt("gamma_D", w.gamma_D);
    opt("gamma_cc", w.gamma_cc);
    opt("gamma_co", w.gamma_co);
    opt("mu_phi", w.mu_phi);
    opt("mu_D", w.mu_D);
    opt("alpha", w.alpha);
    w.require_valid();
    return w;
}

losses::LossWeights read_weights(const fs::path& path) {
    return weights_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Grid and mask
// ---------------------------------------------------------------------------

void write_grid(const fs::path& path, const ScalarGrid& grid) {
    std::ostringstream out;
    out << "SDGRID 1\n"
        << grid.width << ' ' << grid.height << ' ';
    out.precision(17);
    out << grid.pixel_size_mm << ' ' << grid_role_name(grid.role) << '\n';
    std::string payload = out.str();
    payload.reserve(payload.size() + grid.values.size() * 4);
    for (double v : grid.values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        // little-endian
        payload.push_back(static_cast<char>(bits & 0xff));
        payload.push_back(static_cast<char>((bits >> 8) & 0xff));
        payload.push_back(static_cast<char>((bits >> 16) & 0xff));
        payload.push_back(static_cast<char>((bits >> 24) & 0xff));
    }
    atomic_write(path, payload);
}

ScalarGrid read_grid(const fs::path& path) {
    const std::string data = read_file(path);
    std::istringstream in(data);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "SDGRID" || version != "1")
        throw IoError("grid: bad magic in " + path.string());
    int width = 0, height = 0;
    double pixel_size = 0.0;
    std::string role;
    in >> width >> height >> pixel_size >> role;
    if (width <= 0 || height <= 0 || !(pixel_size > 0.0))
        throw IoError("grid: bad header in " + path.string());
    char nl = 0;
    in.get(nl);
    if (nl != '\n') throw IoError("grid: bad header terminator");
    const size_t offset = static_cast<size_t>(in.tellg());
    const size_t need = static_cast<size_t>(width) * height * 4;
    if (data.size() - offset != need)
        throw IoError("grid: payload size mismatch in " + path.string());

    ScalarGrid g;
    g.width = width;
    g.height = height;
    g.pixel_size_mm = pixel_size;
    g.role = grid_role_from_name(role);
    g.values.resize(static_cast<size_t>(width) * height);
    const unsigned char* src =
        reinterpret_cast<const unsigned char*>(data.data()) + offset;
    for (size_t i = 0; i < g.values.size(); ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(src[4 * i]) |
                             (static_cast<std::uint32_t>(src[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(src[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(src[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        g.values[i] = static_cast<double>(f);
    }
    return g;
}

void write_mask(const fs::path& path, const BinaryMask& mask) {
    std::ostringstream out;
    out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
    std::string payload = out.str();
    payload.reserve(payload.size() + mask.bits.size());
    for (auto b : mask.bits) payload.push_back(b ? '\xff' : '\0');
    atomic_write(path, payload);
}

BinaryMask read_mask(const fs::path& path) {
    const std::string data = read_file(path);
    std::istringstream in(data);
    std::string magic;
    int width = 0, height = 0, maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || width <= 0 || height <= 0 || maxval != 255)
        throw IoError("mask: not an 8-bit P5 PGM: " + path.string());
    char nl = 0;
    in.get(nl);
    const size_t offset = static_cast<size_t>(in.tellg());
    if (data.size() - offset != static_cast<size_t>(width) * height)
        throw IoError("mask: payload size mismatch in " + path.string());
    BinaryMask m(width, height);
    for (size_t i = 0; i < m.bits.size(); ++i)
        m.bits[i] = static_cast<unsigned char>(data[offset + i]) >= 128;
    return m;
}

// ---------------------------------------------------------------------------
// Synth config JSON
// ---------------------------------------------------------------------------

std::string synth_config_to_json(const synth::SynthConfig& cfg) {
    json j;
    j["n_cases"] = cfg.n_cases;
    j["n_endo"] = cfg.n_endo;
    j["endo_radius_mm"] = cfg.endo_radius_mm;
    j["epi_radius_mm"] = cfg.epi_radius_mm;
    j["endo_amp_mm"] = cfg.endo_amp_mm;
    j["epi_amp_mm"] = cfg.epi_amp_mm;
    j["noise_sd_mm"] = cfg.noise_sd_mm;
    j["center_range_mm"] = cfg.center_range_mm;
    j["theta_range_rad"] = cfg.theta_range_rad;
    j["min_margin_mm"] = cfg.min_margin_mm;
    j["grid_width"] = cfg.grid.width;
    j["grid_height"] = cfg.grid.height;
    j["pixel_size_mm"] = cfg.grid.pixel_size_mm;
    j["seed"] = cfg.seed;
    return j.dump(2) + "\n";
}

synth::SynthConfig synth_config_from_json(const std::string& text) {
    const json j = parse_json(text, "synth config");
    synth::SynthConfig cfg;
    const auto opt = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j[key].get<std::decay_t<decltype(slot)>>();
    };
    opt("n_cases", cfg.n_cases);
    opt("n_endo", cfg.n_endo);
    opt("endo_radius_mm", cfg.endo_radius_mm);
    opt("epi_radius_mm", cfg.epi_radius_mm);
    opt("endo_amp_mm", cfg.endo_amp_mm);
    opt("epi_amp_mm", cfg.epi_amp_mm);
    opt("noise_sd_mm", cfg.noise_sd_mm);
    opt("center_range_mm", cfg.center_range_mm);
    opt("theta_range_rad", cfg.theta_range_rad);
    opt("min_margin_mm", cfg.min_margin_mm);
    opt("grid_width", cfg.grid.width);
    opt("grid_height", cfg.grid.height);
    opt("pixel_size_mm", cfg.grid.pixel_size_mm);
    opt("seed", cfg.seed);
    cfg.require_valid();
    return cfg;
}

synth::SynthConfig read_synth_config(const fs::path& path) {
    return synth_config_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Fit result JSON
// ---------------------------------------------------------------------------

std::string fit_result_to_json(const fit::FitResult& res) {
    json j;
    j["b"] = std::vector<double>(res.b.data(), res.b.data() + res.b.size());
    j["pose"] = {{"theta_rad", res.pose.theta},
                 {"cx_px", res.pose.center.x},
                 {"cy_px", res.pose.center.y}};
    j["converged"] = res.converged;
    j["iterations"] = res.iterations;
    json trace = json::array();
    for (const auto& rec : res.trace) {
        json row;
        row["total"] = rec.total;
        row["terms"] = rec.terms;
        trace.push_back(std::move(row));
    }
    j["trace"] = std::move(trace);
    return j.dump(2) + "\n";
}

fit::FitResult fit_result_from_json(const std::string& text) {
    const json j = parse_json(text, "fit result");
    fit::FitResult res;
    const auto b = j.at("b").get<std::vector<double>>();
    res.b = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
    const auto& pose = j.at("pose");
    res.pose = Pose{pose.at("theta_rad").get<double>(),
                    {pose.at("cx_px").get<double>(), pose.at("cy_px").get<double>()}};
    res.converged = j.at("converged").get<bool>();
    res.iterations = j.at("iterations").get<int>();
    for (const auto& row : j.at("trace")) {
        fit::IterRecord rec;
        rec.total = row.at("total").get<double>();
        for (const auto& [k, v] : row.at("terms").items())
            rec.terms[k] = v.get<double>();
        res.trace.push_back(std::move(rec));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string config_hash_hex(const std::string& canonical_json) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_json) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const fs::path& out_dir, const RunManifest& manifest) {
    json j;
    j["command"] = manifest.command;
    j["inputs"] = manifest.inputs;
    j["config_hash"] = manifest.config_hash;
    j["seed"] = manifest.seed;
    j["version"] = manifest.version;
    j["timestamp_utc"] = manifest.timestamp_utc;
    atomic_write(out_dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace myoshape::io
