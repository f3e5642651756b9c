#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mvreg/config.hpp"
#include "mvreg/evaluation.hpp"
#include "mvreg/io.hpp"
#include "mvreg/multiview.hpp"

namespace fs = std::filesystem;
using namespace mvreg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitStalled = 2;

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<int> descriptor_frequency;
    std::optional<int> icp_frequency;
    std::optional<double> delta;
    std::optional<double> rho_factor;
    std::optional<std::size_t> reference;
    std::optional<std::uint64_t> seed;
    bool full_propagation = false;
    bool rude = false;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON config file (default: $" + std::string(kConfigEnv) + ")");
        app->add_option("--set", overrides, "Override a config key, key=value (repeatable)");
        app->add_option("--descriptor-frequency", descriptor_frequency, "Keypoint sampling stride");
        app->add_option("--icp-frequency", icp_frequency, "Trimmed ICP sampling stride");
        app->add_option("--delta", delta, "Fraction of seeds to propagate");
        app->add_option("--rho-factor", rho_factor, "Growth radius in keypoint resolutions (0: largest scale)");
        app->add_option("--reference", reference, "Index of the reference scan");
        app->add_option("--seed", seed, "RANSAC seed");
        app->add_flag("--full-propagation", full_propagation, "Propagate every seed");
        app->add_flag("--rude", rude, "Append registered scans without fusing overlaps");
    }

    Config resolve() const {
        Config c = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
        for (const auto& o : overrides) c = apply_override(c, o);
        auto& pw = c.session.pairwise;
        if (descriptor_frequency) pw.descriptor_frequency = *descriptor_frequency;
        if (icp_frequency) pw.icp_frequency = *icp_frequency;
        if (delta) pw.delta = *delta;
        if (rho_factor) pw.rho_factor = *rho_factor;
        if (reference) c.session.reference = *reference;
        if (seed) pw.ransac_seed = *seed;
        if (full_propagation) pw.full_propagation = true;
        if (rude) c.session.augment.rude = true;
        c.validate();
        return c;
    }
};

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            auto listed = list_scans(in);
            out.insert(out.end(), listed.begin(), listed.end());
        } else if (!fs::exists(in)) {
            throw IoError(in + ": no such file or directory");
        } else {
            out.emplace_back(in);
        }
    }
    if (out.empty()) throw IoError("no scan files found");
    return out;
}

std::vector<PointCloud> load_all(const std::vector<fs::path>& paths) {
    std::vector<PointCloud> scans;
    scans.reserve(paths.size());
    for (const auto& p : paths) scans.push_back(load_cloud(p));
    return scans;
}

void write_json(const nlohmann::json& j, const fs::path& path) { write_file_atomic(path, j.dump(2) + "\n"); }

// ------------------------------------------------------------------ register

struct RegisterArgs {
    ConfigArgs config;
    std::vector<std::string> inputs;
    std::string out_dir;
    bool write_model = false;
    bool timings = false;
};

void write_session(const MultiviewResult& r, const std::vector<fs::path>& paths, const RegisterArgs& a) {
    fs::create_directories(a.out_dir);
    std::vector<TransformRecord> records;
    for (std::size_t i = 0; i < r.scans.size(); ++i) {
        const auto& s = r.scans[i];
        records.push_back({paths[i].filename().string(), s.transform, s.tmse, s.pass, s.status});
    }
    save_transforms(records, fs::path(a.out_dir) / "transforms.txt");
    nlohmann::json rep = to_json(session_report(r), a.timings);
    nlohmann::json names = nlohmann::json::array();
    for (const auto& p : paths) names.push_back(p.filename().string());
    rep["scans"] = names;
    write_json(rep, fs::path(a.out_dir) / "report.json");
    if (a.write_model) save_cloud(r.model.full, fs::path(a.out_dir) / "model.ply");
}

int run_register(const RegisterArgs& a) {
    const Config cfg = a.config.resolve();
    const auto paths = expand_inputs(a.inputs);
    const auto scans = load_all(paths);
    try {
        const MultiviewResult r = register_all(scans, cfg.session);
        write_session(r, paths, a);
        std::printf("registered %zu scans with %zu pairwise invocations\n", r.scans.size(), r.invocations());
        return kExitOk;
    } catch (const RegistrationStalled& e) {
        write_session(e.result(), paths, a);
        std::fprintf(stderr, "mvreg: %s:", e.what());
        for (std::size_t i : e.result().unplaced) std::fprintf(stderr, " %s", paths[i].filename().string().c_str());
        std::fprintf(stderr, "\n");
        return kExitStalled;
    }
}

// ------------------------------------------------------------------ pairwise

struct PairwiseArgs {
    ConfigArgs config;
    std::string data;
    std::string model;
    std::string output;
};

int run_pairwise(const PairwiseArgs& a) {
    const Config cfg = a.config.resolve();
    const auto& pc = cfg.session.pairwise;
    const PointCloud data = load_cloud(a.data);
    const PointCloud model = load_cloud(a.model);
    const ScaleSet scales = default_scales(model, pc);
    const PairwiseOutcome out = register_pair(prepare_scan(data, scales, pc), make_model(prepare_scan(model, scales, pc), scales), pc);
    if (!out.result) throw Error("no registration found: " + std::to_string(out.stats.candidates) + " candidate(s)");
    const TransformRecord rec{fs::path(a.data).filename().string(), out.result->transform, out.result->tmse, 1,
                              ScanStatus::registered};
    if (a.output.empty()) std::cout << format_transforms({rec});
    else save_transforms({rec}, a.output);
    return kExitOk;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateArgs {
    std::string estimated;
    std::string ground_truth;
    std::optional<std::size_t> reference;
    std::string output;
};

int run_evaluate(const EvaluateArgs& a) {
    auto est = load_transforms(a.estimated);
    const auto gt = load_transforms(a.ground_truth);
    if (est.size() != gt.size()) {
        throw LengthMismatch("estimated has " + std::to_string(est.size()) + " records, ground truth " + std::to_string(gt.size()));
    }
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < est.size(); ++i) by_id.emplace(est[i].id, i);
    const bool ids_match = by_id.size() == est.size() && std::all_of(gt.begin(), gt.end(), [&](const TransformRecord& r) {
                               return by_id.count(r.id) == 1;
                           });
    std::vector<RigidTransformd> e, g;
    std::vector<std::string> unplaced;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const TransformRecord& match = ids_match ? est[by_id.at(gt[i].id)] : est[i];
        e.push_back(match.transform);
        g.push_back(gt[i].transform);
        if (match.status == ScanStatus::unplaced) unplaced.push_back(match.id);
    }
    std::size_t reference = 0;
    if (a.reference) {
        reference = *a.reference;
    } else {
        auto it = std::find_if(gt.begin(), gt.end(), [](const TransformRecord& r) { return r.status == ScanStatus::reference; });
        if (it != gt.end()) reference = static_cast<std::size_t>(it - gt.begin());
    }
    if (reference >= gt.size()) throw InvalidArgument("reference index out of range");
    nlohmann::json j = to_json(evaluate(e, g, reference));
    j["reference"] = reference;
    j["unplaced"] = unplaced;
    if (!a.output.empty()) write_json(j, a.output);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------- synth

struct SynthArgs {
    std::string out_dir;
    SynthParams params;
    std::size_t points = 20000;
    std::uint64_t shape_seed = 7;
    double radius = 100.0;
    std::string format = "ply";
    bool write_base = false;
};

int run_synth(const SynthArgs& a) {
    CloudFormat fmt = CloudFormat::ply_binary;
    std::string ext = ".ply";
    if (a.format == "ply-ascii") fmt = CloudFormat::ply_ascii;
    else if (a.format == "xyz") { fmt = CloudFormat::xyz; ext = ".xyz"; }
    else if (a.format != "ply") throw InvalidArgument("format must be ply, ply-ascii or xyz");

    const PointCloud base = make_blob(a.points, a.shape_seed, a.radius);
    const SynthScans syn = synth_generate(base, a.params);
    fs::create_directories(a.out_dir);
    const int width = syn.scans.size() > 100 ? 3 : 2;
    std::vector<TransformRecord> gt;
    for (std::size_t i = 0; i < syn.scans.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scan_%0*zu%s", width, i, ext.c_str());
        save_cloud(syn.scans[i], fs::path(a.out_dir) / name, fmt);
        gt.push_back({name, syn.ground_truth[i], 0.0, 0, i == 0 ? ScanStatus::reference : ScanStatus::registered});
    }
    save_transforms(gt, fs::path(a.out_dir) / "ground_truth.txt");
    if (a.write_base) save_cloud(base, fs::path(a.out_dir) / ("base" + ext), fmt);
    std::printf("wrote %zu scans to %s\n", syn.scans.size(), a.out_dir.c_str());
    return kExitOk;
}

// --------------------------------------------------------------------- merge

struct MergeArgs {
    ConfigArgs config;
    std::vector<std::string> inputs;
    std::string transforms;
    std::string output;
};

int run_merge(const MergeArgs& a) {
    const Config cfg = a.config.resolve();
    const auto& pc = cfg.session.pairwise;
    const auto paths = expand_inputs(a.inputs);
    const auto records = load_transforms(a.transforms);
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < records.size(); ++i) by_id.emplace(records[i].id, i);

    struct Item {
        std::size_t scan;
        const TransformRecord* rec;
    };
    std::vector<Item> items;
    std::optional<std::size_t> reference;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        auto it = by_id.find(paths[i].filename().string());
        if (it == by_id.end()) throw ParseError("no transform record for " + paths[i].filename().string());
        const TransformRecord& r = records[it->second];
        if (r.status == ScanStatus::reference) {
            if (reference) throw ParseError("more than one reference record");
            reference = i;
        } else if (r.status == ScanStatus::registered) {
            items.push_back({i, &r});
        }
    }
    if (!reference) throw ParseError("no reference record");
    std::stable_sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.rec->pass < y.rec->pass; });

    const PointCloud ref = load_cloud(paths[*reference]);
    const ScaleSet scales = default_scales(ref, pc);
    ModelState model = make_model(prepare_scan(ref, scales, pc), scales);
    for (const Item& it : items) {
        const ScanData scan = prepare_scan(load_cloud(paths[it.scan]), scales, pc);
        model = augment_model(model, scan, it.rec->transform, pc.tricp(model.diagonal()), cfg.session.augment).model;
    }
    save_cloud(model.full, a.output);
    std::printf("merged %zu scans into %zd points\n", items.size() + 1, static_cast<std::ptrdiff_t>(model.size()));
    return kExitOk;
}

// -------------------------------------------------------------------- report

int run_report(const std::string& path) {
    const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(path + ": not a session report");
    try {
        const auto& names = j.at("scans");
        const auto& status = j.at("status");
        std::printf("scans %zu, reference %s\n", j.at("scan_count").get<std::size_t>(),
                    names.at(j.at("reference").get<std::size_t>()).get<std::string>().c_str());
        std::printf("pairwise invocations %zu over %zu pass(es), %zu reliable\n", j.at("invocations").get<std::size_t>(),
                    j.at("passes").get<std::size_t>(), j.at("reliable_registrations").get<std::size_t>());
        std::printf("model points %zu\n", j.at("model_points").get<std::size_t>());
        for (std::size_t i = 0; i < names.size(); ++i) {
            std::printf("  %-24s %s\n", names[i].get<std::string>().c_str(), status.at(i).get<std::string>().c_str());
        }
        if (j.contains("seconds")) std::printf("total seconds %.2f\n", j["seconds"].at("total").get<double>());
        return j.at("stalled").get<bool>() ? kExitStalled : kExitOk;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view point cloud registration"};
    app.require_subcommand(1);

    RegisterArgs reg;
    auto* c_reg = app.add_subcommand("register", "Register every scan into the reference frame");
    reg.config.attach(c_reg);
    c_reg->add_option("inputs", reg.inputs, "Scan directory or files")->required();
    c_reg->add_option("-o,--output", reg.out_dir, "Output directory")->required();
    c_reg->add_flag("--model", reg.write_model, "Also write the fused model as model.ply");
    c_reg->add_flag("--timings", reg.timings, "Include stage timings in report.json");

    PairwiseArgs pw;
    auto* c_pw = app.add_subcommand("pairwise", "Register one data cloud to one model cloud");
    pw.config.attach(c_pw);
    c_pw->add_option("data", pw.data, "Data cloud")->required();
    c_pw->add_option("model", pw.model, "Model cloud")->required();
    c_pw->add_option("-o,--output", pw.output, "Transforms file (default: stdout)");

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "Compare transforms against ground truth");
    c_ev->add_option("estimated", ev.estimated, "Estimated transforms")->required();
    c_ev->add_option("ground_truth", ev.ground_truth, "Ground-truth transforms")->required();
    c_ev->add_option("--reference", ev.reference, "Gauge entry (default: the reference record)");
    c_ev->add_option("-o,--output", ev.output, "Also write the report here");

    SynthArgs sy;
    auto* c_sy = app.add_subcommand("synth", "Generate overlapping synthetic scans with ground truth");
    c_sy->add_option("-o,--output", sy.out_dir, "Output directory")->required();
    c_sy->add_option("--scans", sy.params.n_scans, "Number of scans")->capture_default_str();
    c_sy->add_option("--overlap", sy.params.overlap, "Overlap between neighboring scans")->capture_default_str();
    c_sy->add_option("--noise", sy.params.noise_sigma, "Noise sigma as a fraction of the bbox diagonal")->capture_default_str();
    c_sy->add_option("--seed", sy.params.seed, "Crop and motion seed")->capture_default_str();
    c_sy->add_option("--points", sy.points, "Points on the base surface")->capture_default_str();
    c_sy->add_option("--shape-seed", sy.shape_seed, "Base surface seed")->capture_default_str();
    c_sy->add_option("--radius", sy.radius, "Base surface size")->capture_default_str();
    c_sy->add_option("--format", sy.format, "ply, ply-ascii or xyz")->capture_default_str();
    c_sy->add_flag("--base", sy.write_base, "Also write the base surface");

    MergeArgs mg;
    auto* c_mg = app.add_subcommand("merge", "Fuse scans into one cloud using a transforms file");
    mg.config.attach(c_mg);
    c_mg->add_option("inputs", mg.inputs, "Scan directory or files")->required();
    c_mg->add_option("-t,--transforms", mg.transforms, "Transforms file")->required();
    c_mg->add_option("-o,--output", mg.output, "Output cloud")->required();

    std::string report_path;
    auto* c_rep = app.add_subcommand("report", "Summarize a session report");
    c_rep->add_option("report", report_path, "report.json from register")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (c_reg->parsed()) return run_register(reg);
        if (c_pw->parsed()) return run_pairwise(pw);
        if (c_ev->parsed()) return run_evaluate(ev);
        if (c_sy->parsed()) return run_synth(sy);
        if (c_mg->parsed()) return run_merge(mg);
        if (c_rep->parsed()) return run_report(report_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mvreg: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
