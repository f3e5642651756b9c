#include "mvreg/config.hpp"

#include <cstdlib>
#include <functional>
#include <type_traits>
#include <vector>

#include "mvreg/io.hpp"

namespace mvreg {

using nlohmann::json;

namespace {

struct Field {
    const char* key;
    std::function<json(const Config&)> get;
    std::function<void(Config&, const json&)> set;
};

template <typename T>
T convert(const char* key, const json& v) {
    auto bad = [&](const char* what) { return ParseError(std::string("config key '") + key + "' " + what); };
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw bad("must be true or false");
        return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw bad("must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_unsigned()) return v.get<T>();
            if (v.get<long long>() < 0) throw bad("must be >= 0");
        }
        return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw bad("must be a number");
        return v.get<T>();
    } else {
        if (!v.is_array()) throw bad("must be an array of numbers");
        T out;
        for (const auto& e : v) {
            if (!e.is_number()) throw bad("must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
}

template <typename Access>
Field field(const char* key, Access access) {
    using T = std::remove_cvref_t<decltype(access(std::declval<Config&>()))>;
    return {key, [access](const Config& c) { return json(access(c)); },
            [key, access](Config& c, const json& v) { access(c) = convert<T>(key, v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        field("descriptor_frequency", [](auto& c) -> auto& { return c.session.pairwise.descriptor_frequency; }),
        field("icp_frequency", [](auto& c) -> auto& { return c.session.pairwise.icp_frequency; }),
        field("scale_multipliers", [](auto& c) -> auto& { return c.session.pairwise.scale_multipliers; }),
        field("normal_scale", [](auto& c) -> auto& { return c.session.pairwise.normal_scale; }),
        field("delta", [](auto& c) -> auto& { return c.session.pairwise.delta; }),
        field("full_propagation", [](auto& c) -> auto& { return c.session.pairwise.full_propagation; }),
        field("lambda", [](auto& c) -> auto& { return c.session.pairwise.lambda; }),
        field("xi_min", [](auto& c) -> auto& { return c.session.pairwise.xi_min; }),
        field("max_iterations", [](auto& c) -> auto& { return c.session.pairwise.max_iterations; }),
        field("epsilon_relative", [](auto& c) -> auto& { return c.session.pairwise.epsilon_relative; }),
        field("ransac_iterations", [](auto& c) -> auto& { return c.session.pairwise.ransac_iterations; }),
        field("ransac_seed", [](auto& c) -> auto& { return c.session.pairwise.ransac_seed; }),
        field("ransac_confidence", [](auto& c) -> auto& { return c.session.pairwise.ransac_confidence; }),
        field("inlier_tol_factor", [](auto& c) -> auto& { return c.session.pairwise.inlier_tol_factor; }),
        field("min_consensus", [](auto& c) -> auto& { return c.session.pairwise.min_consensus; }),
        field("tau_d_factor", [](auto& c) -> auto& { return c.session.pairwise.tau_d_factor; }),
        field("tau_n_degrees", [](auto& c) -> auto& { return c.session.pairwise.tau_n_degrees; }),
        field("tau_len_factor", [](auto& c) -> auto& { return c.session.pairwise.tau_len_factor; }),
        field("rho_factor", [](auto& c) -> auto& { return c.session.pairwise.rho_factor; }),
        field("refit_min", [](auto& c) -> auto& { return c.session.pairwise.refit_min; }),
        field("min_points", [](auto& c) -> auto& { return c.session.pairwise.min_points; }),
        field("selection_iterations", [](auto& c) -> auto& { return c.session.pairwise.selection_iterations; }),
        field("selection_top", [](auto& c) -> auto& { return c.session.pairwise.selection_top; }),
        field("restart_angle", [](auto& c) -> auto& { return c.session.pairwise.restart_angle; }),
        field("max_restart_rounds", [](auto& c) -> auto& { return c.session.pairwise.max_restart_rounds; }),
        field("rude_augmentation", [](auto& c) -> auto& { return c.session.augment.rude; }),
        field("descriptor_gate_factor", [](auto& c) -> auto& { return c.session.augment.descriptor_gate_factor; }),
        field("reference", [](auto& c) -> auto& { return c.session.reference; }),
    };
    return table;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : fields()) {
        if (key == f.key) return &f;
    }
    return nullptr;
}

}  // namespace

void Config::validate() const {
    session.validate();
    if (session.pairwise.scale_multipliers.size() < 2) throw InvalidArgument("scale_multipliers needs at least two entries");
    ScaleSet::from_resolution(1.0, session.pairwise.scale_multipliers);
    if (session.pairwise.normal_scale >= static_cast<int>(session.pairwise.scale_multipliers.size())) {
        throw InvalidArgument("normal_scale must index scale_multipliers");
    }
}

json to_json(const Config& config) {
    json j = json::object();
    for (const auto& f : fields()) j[f.key] = f.get(config);
    return j;
}

Config config_from_json(const json& j, const Config& base) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    Config c = base;
    for (const auto& [key, value] : j.items()) {
        const Field* f = find_field(key);
        if (!f) throw ParseError("unknown config key '" + key + "'");
        f->set(c, value);
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string("invalid config: ") + e.what());
    }
    return c;
}

Config apply_override(const Config& base, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    return config_from_json(json{{key, value}}, base);
}

Config load_config(const std::optional<std::filesystem::path>& path) {
    std::optional<std::filesystem::path> p = path;
    if (!p) {
        if (const char* env = std::getenv(kConfigEnv); env && *env) p = env;
    }
    Config c;
    if (!p) return c;
    json j = json::parse(read_file(*p), nullptr, false);
    if (j.is_discarded()) throw ParseError(p->string() + ": not valid JSON");
    try {
        return config_from_json(j, c);
    } catch (const ParseError& e) {
        throw ParseError(p->string() + ": " + e.what());
    }
}

json to_json(const SessionReport& r, bool include_timings) {
    json j;
    j["scan_count"] = r.scan_count;
    j["reference"] = r.reference;
    j["reliable_registrations"] = r.reliable_registrations;
    j["invocations"] = r.invocations;
    j["passes"] = r.passes;
    j["placed_per_pass"] = r.placed_per_pass;
    j["unplaced"] = r.unplaced;
    json status = json::array();
    for (ScanStatus s : r.status) status.push_back(to_string(s));
    j["status"] = status;
    j["tmse_history"] = r.tmse_history;
    j["model_points"] = r.model_points;
    j["stalled"] = !r.unplaced.empty();
    if (include_timings) {
        j["seconds"] = {{"prepare", r.seconds.prepare},
                        {"pairwise", r.seconds.pairwise},
                        {"augmentation", r.seconds.augmentation},
                        {"total", r.seconds.total}};
    }
    return j;
}

json to_json(const ErrorReport& r) {
    return {{"e_R", r.e_R}, {"e_t", r.e_t}, {"rotation_errors", r.rotation_errors}, {"translation_errors", r.translation_errors}};
}

}  // namespace mvreg
