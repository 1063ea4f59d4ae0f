#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>

#include "esparse/error.hpp"

namespace esparse::cli {

namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

std::string lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return text;
}

double to_double(const std::string& key, const std::string& text) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, value);
    if (result.ec != std::errc() || result.ptr != end) {
        throw InvalidArgument(key + ": invalid number '" + text + "'");
    }
    return value;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& text) {
    Int value{};
    const auto* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, value);
    if (result.ec != std::errc() || result.ptr != end) {
        throw InvalidArgument(key + ": invalid integer '" + text + "'");
    }
    return value;
}

bool to_bool(const std::string& key, const std::string& text) {
    const auto v = lower(text);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw InvalidArgument(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text,
                            const std::function<double(const std::string&)>& parse) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string::npos ? std::string::npos
                                                                             : comma - start));
        if (item.empty()) throw InvalidArgument(key + ": empty list entry");
        values.push_back(parse(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += format_number(values[i]);
    }
    return out;
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Duffing: return "duffing";
        case Scenario::Friction: return "friction";
        case Scenario::Ingest: return "ingest";
    }
    return "duffing";
}

struct Key {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename Field>
Key number_key(const std::string& name, Field field) {
    return {[name, field](RunConfig& c, const std::string& v) { field(c) = to_double(name, v); },
            [field](const RunConfig& c) {
                return format_number(field(const_cast<RunConfig&>(c)));
            }};
}

template <typename Int, typename Field>
Key integer_key(const std::string& name, Field field) {
    return {[name, field](RunConfig& c, const std::string& v) {
                field(c) = to_integer<Int>(name, v);
            },
            [field](const RunConfig& c) {
                return std::to_string(field(const_cast<RunConfig&>(c)));
            }};
}

template <typename Field>
Key snr_key(Field field) {
    return {[field](RunConfig& c, const std::string& v) { field(c) = parse_snr(v); },
            [field](const RunConfig& c) {
                return format_number(field(const_cast<RunConfig&>(c)));
            }};
}

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = [] {
        std::map<std::string, Key> k;
        k["data"] = {[](RunConfig& c, const std::string& v) { c.data = v; },
                     [](const RunConfig& c) { return c.data.string(); }};
        k["split"] = integer_key<std::size_t>("split", [](RunConfig& c) -> auto& { return c.split; });
        k["params.m"] = number_key("params.m", [](RunConfig& c) -> auto& { return c.params.m; });
        k["params.c"] = number_key("params.c", [](RunConfig& c) -> auto& { return c.params.c; });
        k["params.k"] = number_key("params.k", [](RunConfig& c) -> auto& { return c.params.k; });
        k["params.k3"] = number_key("params.k3", [](RunConfig& c) -> auto& { return c.params.k3; });
        k["params.mu1"] = number_key("params.mu1", [](RunConfig& c) -> auto& { return c.params.mu1; });
        k["params.mu2"] = number_key("params.mu2", [](RunConfig& c) -> auto& { return c.params.mu2; });
        k["track.k1"] = number_key("track.k1", [](RunConfig& c) -> auto& { return c.track.k1; });
        k["track.a"] = number_key("track.a", [](RunConfig& c) -> auto& { return c.track.a; });
        k["track.b"] = number_key("track.b", [](RunConfig& c) -> auto& { return c.track.b; });
        k["track.mu"] = number_key("track.mu", [](RunConfig& c) -> auto& { return c.track.mu; });
        k["chirp.f0"] = number_key("chirp.f0", [](RunConfig& c) -> auto& { return c.f0; });
        k["chirp.f1"] = number_key("chirp.f1", [](RunConfig& c) -> auto& { return c.f1; });
        k["chirp.duration"] =
            number_key("chirp.duration", [](RunConfig& c) -> auto& { return c.duration; });
        k["chirp.amplitude"] =
            number_key("chirp.amplitude", [](RunConfig& c) -> auto& { return c.amplitude; });
        k["sim.dt"] = number_key("sim.dt", [](RunConfig& c) -> auto& { return c.dt; });
        k["noise.q"] = snr_key([](RunConfig& c) -> auto& { return c.noise.q; });
        k["noise.qdot"] = snr_key([](RunConfig& c) -> auto& { return c.noise.qdot; });
        k["noise.qddot"] = snr_key([](RunConfig& c) -> auto& { return c.noise.qddot; });
        k["noise.zddot"] = snr_key([](RunConfig& c) -> auto& { return c.noise.zddot; });
        k["gp.population"] =
            integer_key<std::size_t>("gp.population", [](RunConfig& c) -> auto& { return c.gp.population; });
        k["gp.generations"] =
            integer_key<int>("gp.generations", [](RunConfig& c) -> auto& { return c.gp.generations; });
        k["gp.crossover"] =
            number_key("gp.crossover", [](RunConfig& c) -> auto& { return c.gp.crossover; });
        k["gp.mutation"] =
            number_key("gp.mutation", [](RunConfig& c) -> auto& { return c.gp.mutation; });
        k["gp.tournament"] =
            integer_key<std::size_t>("gp.tournament", [](RunConfig& c) -> auto& { return c.gp.tournament; });
        k["gp.elite_fraction"] =
            number_key("gp.elite_fraction", [](RunConfig& c) -> auto& { return c.gp.elite_fraction; });
        k["gp.max_depth"] =
            integer_key<int>("gp.max_depth", [](RunConfig& c) -> auto& { return c.gp.max_depth; });
        k["gp.constant_probability"] = number_key(
            "gp.constant_probability",
            [](RunConfig& c) -> auto& { return c.gp.primitives.constant_probability; });
        k["gp.primitives"] = {
            [](RunConfig& c, const std::string& v) {
                auto set = expr::PrimitiveSet::from_names(v);
                set.constant_probability = c.gp.primitives.constant_probability;
                set.constant_min = c.gp.primitives.constant_min;
                set.constant_max = c.gp.primitives.constant_max;
                c.gp.primitives = set;
            },
            [](const RunConfig& c) { return c.gp.primitives.names(); }};
        k["reg.lambda1"] = {
            [](RunConfig& c, const std::string& v) {
                c.reg.lambda1 = to_list("reg.lambda1", v, [](const std::string& s) {
                    return to_double("reg.lambda1", s);
                });
            },
            [](const RunConfig& c) { return join(c.reg.lambda1); }};
        k["reg.lambda2"] = {
            [](RunConfig& c, const std::string& v) {
                c.reg.lambda2 = to_list("reg.lambda2", v, [](const std::string& s) {
                    return to_double("reg.lambda2", s);
                });
            },
            [](const RunConfig& c) { return join(c.reg.lambda2); }};
        k["reg.zero_threshold"] =
            number_key("reg.zero_threshold", [](RunConfig& c) -> auto& { return c.reg.zero_threshold; });
        k["reg.tolerance"] =
            number_key("reg.tolerance", [](RunConfig& c) -> auto& { return c.reg.tolerance; });
        k["reg.max_iterations"] = integer_key<int>(
            "reg.max_iterations", [](RunConfig& c) -> auto& { return c.reg.max_iterations; });
        k["reg.selection_tolerance"] = number_key(
            "reg.selection_tolerance", [](RunConfig& c) -> auto& { return c.reg.selection_tolerance; });
        k["seed"] = integer_key<std::uint64_t>("seed", [](RunConfig& c) -> auto& { return c.seed; });
        k["repeats"] = integer_key<int>("repeats", [](RunConfig& c) -> auto& { return c.repeats; });
        k["out"] = {[](RunConfig& c, const std::string& v) { c.out = v; },
                    [](const RunConfig& c) { return c.out.string(); }};
        k["sweep.snr"] = {
            [](RunConfig& c, const std::string& v) { c.snr = to_list("sweep.snr", v, parse_snr); },
            [](const RunConfig& c) { return join(c.snr); }};
        k["baseline.population"] = integer_key<std::size_t>(
            "baseline.population", [](RunConfig& c) -> auto& { return c.baseline_population; });
        k["baseline.generations"] = integer_key<int>(
            "baseline.generations", [](RunConfig& c) -> auto& { return c.baseline_generations; });
        k["quiet"] = {[](RunConfig& c, const std::string& v) { c.quiet = to_bool("quiet", v); },
                      [](const RunConfig& c) { return std::string(c.quiet ? "true" : "false"); }};
        return k;
    }();
    return table;
}

}  // namespace

double parse_snr(const std::string& text) {
    const auto v = lower(trim(text));
    if (v == "inf" || v == "+inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    const double value = to_double("snr", v);
    if (!std::isfinite(value)) throw InvalidArgument("snr: invalid value '" + text + "'");
    return value;
}

std::string format_number(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

dynamics::Scenario RunConfig::simulation() const {
    dynamics::Scenario s;
    s.params = scenario == Scenario::Friction
                   ? dynamics::params_from_track(track, params.m, params.c)
                   : params;
    s.f0 = f0;
    s.f1 = f1;
    s.duration = duration;
    s.amplitude = amplitude;
    s.options.dt = dt;
    s.options.split = split;
    return s;
}

void RunConfig::validate() const {
    if (scenario == Scenario::Ingest && data.empty()) {
        throw InvalidArgument("ingest scenario needs a data path");
    }
    if (scenario != Scenario::Ingest && !data.empty()) {
        throw InvalidArgument("a data path cannot be combined with a simulated scenario");
    }
    if (repeats < 1) throw InvalidArgument("repeats must be at least 1");
    if (split == 0) throw InvalidArgument("split must be positive");
    if (snr.empty()) throw InvalidArgument("sweep.snr must list at least one level");
    if (baseline_population < 2 || baseline_generations < 1) {
        throw InvalidArgument("baseline population must be >= 2 and generations >= 1");
    }
    if (simulated()) {
        if (!(dt > 0.0) || !(duration > 0.0) || !(f0 > 0.0) || !(f1 > 0.0)) {
            throw InvalidArgument("chirp frequencies, duration and dt must be positive");
        }
        if (scenario == Scenario::Friction) track.validate();
        simulation().params.validate();
    }
    gp.validate();
    reg.validate();
}

Settings parse_settings(std::istream& in, const std::string& origin) {
    Settings settings;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument(origin + ":" + std::to_string(number) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw InvalidArgument(origin + ":" + std::to_string(number) + ": empty key");
        }
        settings[key] = trim(line.substr(eq + 1));
    }
    return settings;
}

Settings read_settings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path.string());
    return parse_settings(in, path.string());
}

RunConfig make_config(const Settings& settings) {
    RunConfig config;
    const auto scenario = settings.find("scenario");
    const auto data = settings.find("data");
    std::string name = scenario != settings.end() ? lower(scenario->second)
                       : data != settings.end() && !data->second.empty() ? "ingest"
                                                                         : "duffing";
    if (name == "duffing") {
        config.scenario = Scenario::Duffing;
    } else if (name == "friction") {
        config.scenario = Scenario::Friction;
        config.gp = evolve::GPConfig::friction_duffing();
    } else if (name == "ingest") {
        config.scenario = Scenario::Ingest;
    } else {
        throw InvalidArgument("scenario: expected duffing, friction or ingest, got '" + name + "'");
    }
    // Primitive sets are replaced wholesale; apply them before the
    // constant-generation keys that tweak them.
    if (const auto p = settings.find("gp.primitives"); p != settings.end()) {
        keys().at("gp.primitives").set(config, p->second);
    }
    for (const auto& [key, value] : settings) {
        if (key == "scenario" || key == "gp.primitives") continue;
        const auto it = keys().find(key);
        if (it == keys().end()) throw InvalidArgument("unknown config key '" + key + "'");
        it->second.set(config, value);
    }
    return config;
}

Settings to_settings(const RunConfig& config) {
    Settings settings;
    settings["scenario"] = scenario_name(config.scenario);
    for (const auto& [key, entry] : keys()) settings[key] = entry.get(config);
    if (config.data.empty()) settings.erase("data");
    return settings;
}

}  // namespace esparse::cli
