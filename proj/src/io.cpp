#include "rfhgn/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace rfhgn {

using nlohmann::json;
namespace fs = std::filesystem;

ModelIoError::ModelIoError(Kind kind, std::string field, const std::string& what)
    : std::runtime_error(what), kind_(kind), field_(std::move(field)) {}

const char* to_string(ModelIoError::Kind kind) {
    switch (kind) {
        case ModelIoError::Kind::io: return "io";
        case ModelIoError::Kind::parse: return "parse";
        case ModelIoError::Kind::truncated: return "truncated";
        case ModelIoError::Kind::unsupported_version: return "unsupported_version";
        case ModelIoError::Kind::missing_field: return "missing_field";
        case ModelIoError::Kind::bad_field: return "bad_field";
        case ModelIoError::Kind::dim_mismatch: return "dim_mismatch";
    }
    return "io";
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// ---- model documents ----

using Kind = ModelIoError::Kind;

json layer_to_json(const LayerParams& layer) {
    json w = json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    json b = json::array();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) b.push_back(layer.bias(i));
    return {{"rows", layer.weight.rows()}, {"cols", layer.weight.cols()}, {"weight", w}, {"bias", b}};
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ModelIoError(Kind::bad_field, path, "field '" + path + "' is not an object");
    auto it = obj.find(key);
    const std::string full = path.empty() ? key : path + "." + key;
    if (it == obj.end()) throw ModelIoError(Kind::missing_field, full, "missing field '" + full + "'");
    return *it;
}

double need_number(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = need(obj, key, path);
    const std::string full = path.empty() ? key : path + "." + key;
    if (!v.is_number()) throw ModelIoError(Kind::bad_field, full, "field '" + full + "' must be a number");
    return v.get<double>();
}

int need_int(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = need(obj, key, path);
    const std::string full = path.empty() ? key : path + "." + key;
    if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > (1 << 30))
        throw ModelIoError(Kind::bad_field, full, "field '" + full + "' must be a non-negative integer");
    return v.get<int>();
}

std::vector<double> need_array(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = need(obj, key, path);
    const std::string full = path.empty() ? key : path + "." + key;
    if (!v.is_array()) throw ModelIoError(Kind::bad_field, full, "field '" + full + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ModelIoError(Kind::bad_field, full, "field '" + full + "' has a non-numeric entry at " +
                                                          std::to_string(i));
        out.push_back(v[i].get<double>());
    }
    return out;
}

LayerParams layer_from_json(const json& doc, const std::string& key, int rows, int cols) {
    const auto& obj = need(doc, key, "");
    const int r = need_int(obj, "rows", key);
    const int c = need_int(obj, "cols", key);
    if (r != rows || c != cols) {
        throw ModelIoError(Kind::dim_mismatch, key,
                           key + " is " + std::to_string(r) + "x" + std::to_string(c) + ", dims imply " +
                               std::to_string(rows) + "x" + std::to_string(cols));
    }
    const auto w = need_array(obj, "weight", key);
    const auto b = need_array(obj, "bias", key);
    if (w.size() != static_cast<std::size_t>(r) * c)
        throw ModelIoError(Kind::dim_mismatch, key + ".weight", key + ".weight has " + std::to_string(w.size()) +
                                                                    " entries, expected " + std::to_string(r * c));
    if (b.size() != static_cast<std::size_t>(r))
        throw ModelIoError(Kind::dim_mismatch, key + ".bias",
                           key + ".bias has " + std::to_string(b.size()) + " entries, expected " + std::to_string(r));
    LayerParams layer;
    layer.weight.resize(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) layer.weight(i, j) = w[static_cast<std::size_t>(i) * c + j];
    layer.bias = Eigen::Map<const Vec>(b.data(), r);
    return layer;
}

}  // namespace

std::string model_to_string(const ModelParams& params) {
    params.validate();
    json doc;
    doc["format"] = "rfhgn-model";
    doc["version"] = kModelFormatVersion;
    doc["dims"] = {{"dim", params.dims.dim}, {"d_h", params.dims.d_h}, {"d_m", params.dims.d_m}};
    doc["activation"] = to_string(params.activation);
    doc["invariance"] = {{"eps_deg", params.invariance.eps_deg},
                         {"eps_colinear", params.invariance.eps_colinear},
                         {"frame_gradient", to_string(params.invariance.frame_gradient)},
                         {"edge_mode", to_string(params.invariance.edge_mode)}};
    doc["node_enc"] = layer_to_json(params.node_enc);
    doc["edge_enc"] = layer_to_json(params.edge_enc);
    doc["msg_enc"] = layer_to_json(params.msg_enc);
    json w = json::array();
    for (Eigen::Index i = 0; i < params.readout_w.size(); ++i) w.push_back(params.readout_w(i));
    doc["readout"] = {{"weight", w}, {"bias", params.readout_b}};
    return doc.dump(1) + "\n";
}

ModelParams model_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        if (text.find_first_not_of(" \t\r\n") == std::string::npos || e.byte >= text.size())
            throw ModelIoError(Kind::truncated, "", std::string("model document is truncated: ") + e.what());
        throw ModelIoError(Kind::parse, "", std::string("model document is not valid: ") + e.what());
    }
    if (!doc.is_object()) throw ModelIoError(Kind::parse, "", "model document must be an object");
    const auto& fmt = need(doc, "format", "");
    if (!fmt.is_string() || fmt.get<std::string>() != "rfhgn-model")
        throw ModelIoError(Kind::bad_field, "format", "field 'format' must be \"rfhgn-model\"");
    const auto& ver = need(doc, "version", "");
    if (!ver.is_number_integer()) throw ModelIoError(Kind::bad_field, "version", "field 'version' must be an integer");
    if (ver.get<long long>() != kModelFormatVersion) {
        throw ModelIoError(Kind::unsupported_version, "version",
                           "unsupported model format version " + std::to_string(ver.get<long long>()) +
                               " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
    }

    ModelParams p;
    const auto& dims = need(doc, "dims", "");
    p.dims.dim = need_int(dims, "dim", "dims");
    p.dims.d_h = need_int(dims, "d_h", "dims");
    p.dims.d_m = need_int(dims, "d_m", "dims");
    if (p.dims.dim < 1 || p.dims.dim > 3) throw ModelIoError(Kind::bad_field, "dims.dim", "dims.dim must be 1, 2 or 3");
    if (p.dims.d_h < 1) throw ModelIoError(Kind::bad_field, "dims.d_h", "dims.d_h must be >= 1");
    if (p.dims.d_m < 1) throw ModelIoError(Kind::bad_field, "dims.d_m", "dims.d_m must be >= 1");

    const auto& act = need(doc, "activation", "");
    try {
        if (!act.is_string()) throw std::invalid_argument("not a string");
        p.activation = activation_from_string(act.get<std::string>());
    } catch (const std::invalid_argument&) {
        throw ModelIoError(Kind::bad_field, "activation", "field 'activation' names no known activation");
    }
    const auto& inv = need(doc, "invariance", "");
    p.invariance.eps_deg = need_number(inv, "eps_deg", "invariance");
    p.invariance.eps_colinear = need_number(inv, "eps_colinear", "invariance");
    const auto& fg = need(inv, "frame_gradient", "invariance");
    try {
        if (!fg.is_string()) throw std::invalid_argument("not a string");
        p.invariance.frame_gradient = frame_gradient_from_string(fg.get<std::string>());
    } catch (const std::invalid_argument&) {
        throw ModelIoError(Kind::bad_field, "invariance.frame_gradient",
                           "field 'invariance.frame_gradient' must be \"exact\" or \"frozen\"");
    }
    const auto& em = need(inv, "edge_mode", "invariance");
    try {
        if (!em.is_string()) throw std::invalid_argument("not a string");
        p.invariance.edge_mode = edge_mode_from_string(em.get<std::string>());
    } catch (const std::invalid_argument&) {
        throw ModelIoError(Kind::bad_field, "invariance.edge_mode",
                           "field 'invariance.edge_mode' must be \"shared\" or \"directed\"");
    }

    p.node_enc = layer_from_json(doc, "node_enc", p.dims.d_h, p.dims.d_v());
    p.edge_enc = layer_from_json(doc, "edge_enc", p.dims.d_h, p.dims.d_e());
    p.msg_enc = layer_from_json(doc, "msg_enc", p.dims.d_m, 2 * p.dims.d_h);
    const auto& ro = need(doc, "readout", "");
    const auto w = need_array(ro, "weight", "readout");
    if (w.size() != static_cast<std::size_t>(p.dims.d_l()))
        throw ModelIoError(Kind::dim_mismatch, "readout.weight",
                           "readout.weight has " + std::to_string(w.size()) + " entries, expected " +
                               std::to_string(p.dims.d_l()));
    p.readout_w = Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
    p.readout_b = need_number(ro, "bias", "readout");
    return p;
}

void save_model(const ModelParams& params, const fs::path& path) {
    try {
        write_text_file(path, model_to_string(params));
    } catch (const ModelIoError&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw ModelIoError(Kind::io, "", e.what());
    }
}

ModelParams load_model(const fs::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::runtime_error& e) {
        throw ModelIoError(Kind::io, "", e.what());
    }
    return model_from_string(text);
}

// ---- datasets ----

namespace {

const char* axis_name(int a) { return a == 0 ? "x" : a == 1 ? "y" : "z"; }

std::vector<std::string> csv_columns(const GraphTopology& topo, bool with_deriv) {
    std::vector<std::string> cols;
    const char* groups[] = {"q", "p", "q_dot", "p_dot"};
    const int n_groups = with_deriv ? 4 : 2;
    for (int g = 0; g < n_groups; ++g)
        for (int i = 0; i < topo.n_nodes(); ++i)
            for (int a = 0; a < topo.dim(); ++a)
                cols.push_back(std::string(groups[g]) + "_" + std::to_string(i) + "_" + axis_name(a));
    return cols;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

void append_number(std::string& out, double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(len));
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vec vec_from_json(const json& a, Eigen::Index size, const std::string& field) {
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != size)
        throw std::runtime_error("dataset field '" + field + "' must be an array of " + std::to_string(size));
    Vec v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json system_to_json(const SystemConfig& s) {
    return {{"kind", to_string(s.kind)}, {"n", s.n},     {"nx", s.nx},
            {"ny", s.ny},                {"dim", s.dim}, {"rest_length", s.rest_length},
            {"placement", to_string(s.placement)}};
}

}  // namespace

void write_samples_csv(const Dataset& ds, const fs::path& path) {
    const bool with_deriv = !ds.samples.empty() && ds.samples.front().deriv.has_value();
    const auto cols = csv_columns(ds.topology, with_deriv);
    std::string text;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) text += ',';
        text += cols[c];
    }
    text += '\n';
    for (std::size_t k = 0; k < ds.samples.size(); ++k) {
        const auto& s = ds.samples[k];
        if (s.deriv.has_value() != with_deriv)
            throw std::invalid_argument("sample " + std::to_string(k) + ": derivatives must be present on all or none");
        Vec row = s.state.flat();
        if (with_deriv) {
            Vec d = s.deriv->flat();
            row.conservativeResize(row.size() + d.size());
            row.tail(d.size()) = d;
        }
        for (Eigen::Index i = 0; i < row.size(); ++i) {
            if (i) text += ',';
            append_number(text, row(i));
        }
        text += '\n';
    }
    write_text_file(path, text);
}

std::vector<Sample> read_samples_csv(const GraphTopology& topo, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    bool with_deriv = false;
    if (header == csv_columns(topo, true)) {
        with_deriv = true;
    } else if (header != csv_columns(topo, false)) {
        throw std::runtime_error(path.string() + ": header does not match a " + std::to_string(topo.n_nodes()) +
                                 "-node graph in " + std::to_string(topo.dim()) + "D");
    }
    const auto n = static_cast<Eigen::Index>(topo.coord_size());
    std::vector<Sample> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " values, got " + std::to_string(fields.size()));
        Vec row(static_cast<Eigen::Index>(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto& f = fields[i];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), row(static_cast<Eigen::Index>(i)));
            if (res.ec != std::errc() || res.ptr != f.data() + f.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad value in column " +
                                         header[i]);
        }
        Sample s;
        s.state = PhaseState::from_flat(row.head(2 * n));
        if (with_deriv) s.deriv = PhaseState::from_flat(row.segment(2 * n, 2 * n));
        out.push_back(std::move(s));
    }
    return out;
}

void write_dataset_dir(const SystemConfig& system, const GeneratedData& data, const fs::path& dir) {
    fs::create_directories(dir);
    write_samples_csv(data.train, dir / "train.csv");
    write_samples_csv(data.test, dir / "test.csv");
    auto anchor = [](const Dataset& ds) {
        return json{{"q", vec_to_json(ds.anchor.state.q)}, {"p", vec_to_json(ds.anchor.state.p)},
                    {"h0", ds.anchor.h0}};
    };
    json doc{{"schema_version", 1},
             {"system", system_to_json(system)},
             {"train", {{"samples", data.train.samples.size()}, {"anchor", anchor(data.train)}}},
             {"test", {{"samples", data.test.samples.size()}, {"anchor", anchor(data.test)}}}};
    write_text_file(dir / "dataset.json", doc.dump(2) + "\n");
}

StoredData read_dataset_dir(const fs::path& dir) {
    const json doc = json::parse(read_text_file(dir / "dataset.json"));
    if (doc.value("schema_version", 0) != 1) throw std::runtime_error("dataset.json: unsupported schema_version");
    StoredData out;
    const auto& s = doc.at("system");
    out.system.kind = system_kind_from_string(s.at("kind").get<std::string>());
    out.system.n = s.at("n").get<int>();
    out.system.nx = s.at("nx").get<int>();
    out.system.ny = s.at("ny").get<int>();
    out.system.dim = s.at("dim").get<int>();
    out.system.rest_length = s.at("rest_length").get<double>();
    out.system.placement = placement_from_string(s.at("placement").get<std::string>());
    const auto topo = out.system.build().topology;
    auto load_part = [&](const char* name, Dataset& ds) {
        const auto& part = doc.at(name);
        ds.topology = topo;
        ds.samples = read_samples_csv(topo, dir / (std::string(name) + ".csv"));
        if (ds.samples.size() != part.at("samples").get<std::size_t>())
            throw std::runtime_error(std::string(name) + ".csv: sample count differs from dataset.json");
        const auto& a = part.at("anchor");
        const auto n = static_cast<Eigen::Index>(topo.coord_size());
        ds.anchor.state.q = vec_from_json(a.at("q"), n, std::string(name) + ".anchor.q");
        ds.anchor.state.p = vec_from_json(a.at("p"), n, std::string(name) + ".anchor.p");
        ds.anchor.h0 = a.at("h0").get<double>();
    };
    load_part("train", out.data.train);
    load_part("test", out.data.test);
    return out;
}

// ---- run configs ----

namespace {

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("config: '" + section + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!ok.count(it.key()))
            throw ConfigError("config: unknown key '" + (section.empty() ? "" : section + ".") + it.key() + "'");
    }
}

template <class T>
void read_opt(const json& obj, const char* key, T& dst, const std::string& section) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        dst = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + (section.empty() ? "" : section + ".") + key + "'");
    }
}

void read_range(const json& obj, const char* key, Range& dst, const std::string& section) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
        throw ConfigError("config: '" + section + "." + key + "' must be [low, high]");
    dst = {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

template <class F>
auto parse_enum(const json& obj, const char* key, const std::string& section, F parse)
    -> std::optional<decltype(parse(std::string()))> {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    try {
        return parse(it->get<std::string>());
    } catch (const std::exception&) {
        throw ConfigError("config: bad value for '" + section + "." + key + "'");
    }
}

ExecPolicy policy_from_string(const std::string& s) {
    if (s == "serial") return ExecPolicy::serial;
    if (s == "parallel") return ExecPolicy::parallel;
    throw std::invalid_argument("unknown policy: " + s);
}

}  // namespace

std::string config_to_string(const RunConfig& cfg) {
    json methods = json::array();
    for (auto m : cfg.zero_shot.methods) methods.push_back(to_string(m));
    json doc{
        {"schema_version", RunConfig::kSchemaVersion},
        {"name", cfg.name},
        {"system", system_to_json(cfg.system)},
        {"data",
         {{"count", cfg.data.count},
          {"train_fraction", cfg.data.train_fraction},
          {"disp", {cfg.data.disp.low, cfg.data.disp.high}},
          {"mom", {cfg.data.mom.low, cfg.data.mom.high}}}},
        {"model", {{"d_h", cfg.dims.d_h}, {"d_m", cfg.dims.d_m}, {"d_l", cfg.dims.d_l()}}},
        {"invariance",
         {{"eps_deg", cfg.invariance.eps_deg},
          {"eps_colinear", cfg.invariance.eps_colinear},
          {"frame_gradient", to_string(cfg.invariance.frame_gradient)},
          {"edge_mode", to_string(cfg.invariance.edge_mode)}}},
        {"sampler",
         {{"method", to_string(cfg.sampler.method)},
          {"s1", cfg.sampler.s1},
          {"s2", cfg.sampler.s2},
          {"elm_bias_low", cfg.sampler.elm_bias_low},
          {"elm_bias_high", cfg.sampler.elm_bias_high},
          {"resample_duplicates", cfg.sampler.resample_duplicates},
          {"max_retries", cfg.sampler.max_retries},
          {"pool_cap", cfg.sampler.pool_cap}}},
        {"solver",
         {{"method", to_string(cfg.solver.method)},
          {"rcond", cfg.solver.rcond},
          {"ridge_lambda", cfg.solver.ridge_lambda},
          {"block_samples", cfg.solver.block_samples},
          {"policy", cfg.solver.policy == ExecPolicy::serial ? "serial" : "parallel"}}},
        {"integration",
         {{"dt", cfg.integration.dt},
          {"steps", cfg.integration.steps},
          {"fp_tol", cfg.integration.options.fp_tol},
          {"fp_max_iter", cfg.integration.options.fp_max_iter},
          {"separable_shortcut", cfg.integration.options.use_separable_shortcut}}},
        {"zero_shot",
         {{"train_sizes", cfg.zero_shot.train_sizes},
          {"test_sizes", cfg.zero_shot.test_sizes},
          {"test_count", cfg.zero_shot.test_count},
          {"max_nodes", cfg.zero_shot.max_nodes},
          {"methods", methods}}},
        {"ablation",
         {{"d_h", cfg.ablation.d_h},
          {"widths", cfg.ablation.widths},
          {"axis", cfg.ablation.axis == AblationAxis::message ? "message" : "readout"}}},
        {"seed", cfg.seed},
        {"n_seeds", cfg.n_seeds},
    };
    return doc.dump(2) + "\n";
}

RunConfig config_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not a valid document: ") + e.what());
    }
    check_keys(doc, "", {"schema_version", "preset", "name", "system", "data", "model", "invariance", "sampler", "solver",
                         "integration", "zero_shot", "ablation", "seed", "n_seeds"});
    if (doc.contains("schema_version") && doc["schema_version"] != RunConfig::kSchemaVersion)
        throw ConfigError("config: unsupported schema_version");

    RunConfig cfg;
    if (doc.contains("preset")) {
        const auto name = doc["preset"].is_string() ? doc["preset"].get<std::string>() : std::string();
        if (!is_preset(name)) throw ConfigError("config: unknown preset '" + name + "'");
        cfg = preset_config(name);
    }
    read_opt(doc, "name", cfg.name, "");
    read_opt(doc, "seed", cfg.seed, "");
    read_opt(doc, "n_seeds", cfg.n_seeds, "");

    if (auto it = doc.find("system"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "system", {"kind", "n", "nx", "ny", "dim", "rest_length", "placement"});
        if (auto k = parse_enum(s, "kind", "system", system_kind_from_string)) cfg.system.kind = *k;
        read_opt(s, "n", cfg.system.n, "system");
        read_opt(s, "nx", cfg.system.nx, "system");
        read_opt(s, "ny", cfg.system.ny, "system");
        read_opt(s, "dim", cfg.system.dim, "system");
        read_opt(s, "rest_length", cfg.system.rest_length, "system");
        if (auto m = parse_enum(s, "placement", "system", placement_from_string)) cfg.system.placement = *m;
    }
    if (auto it = doc.find("data"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "data", {"count", "train_fraction", "disp", "mom"});
        read_opt(s, "count", cfg.data.count, "data");
        read_opt(s, "train_fraction", cfg.data.train_fraction, "data");
        read_range(s, "disp", cfg.data.disp, "data");
        read_range(s, "mom", cfg.data.mom, "data");
    }
    if (auto it = doc.find("model"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "model", {"d_h", "d_m", "d_l"});
        read_opt(s, "d_h", cfg.dims.d_h, "model");
        if (s.contains("d_m") && s.contains("d_l")) {
            int d_m = 0, d_l = 0;
            read_opt(s, "d_m", d_m, "model");
            read_opt(s, "d_l", d_l, "model");
            if (d_l != cfg.dims.d_h + d_m) throw ConfigError("config: model.d_l must equal model.d_h + model.d_m");
            cfg.dims.d_m = d_m;
        } else if (s.contains("d_l")) {
            int d_l = 0;
            read_opt(s, "d_l", d_l, "model");
            cfg.dims.d_m = d_l - cfg.dims.d_h;
        } else {
            read_opt(s, "d_m", cfg.dims.d_m, "model");
        }
    }
    if (auto it = doc.find("invariance"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "invariance", {"eps_deg", "eps_colinear", "frame_gradient", "edge_mode"});
        read_opt(s, "eps_deg", cfg.invariance.eps_deg, "invariance");
        read_opt(s, "eps_colinear", cfg.invariance.eps_colinear, "invariance");
        if (auto m = parse_enum(s, "frame_gradient", "invariance", frame_gradient_from_string))
            cfg.invariance.frame_gradient = *m;
        if (auto m = parse_enum(s, "edge_mode", "invariance", edge_mode_from_string)) cfg.invariance.edge_mode = *m;
    }
    if (auto it = doc.find("sampler"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "sampler", {"method", "s1", "s2", "elm_bias_low", "elm_bias_high", "resample_duplicates",
                                  "max_retries", "pool_cap"});
        if (auto m = parse_enum(s, "method", "sampler", sampler_method_from_string)) cfg.sampler.method = *m;
        read_opt(s, "s1", cfg.sampler.s1, "sampler");
        read_opt(s, "s2", cfg.sampler.s2, "sampler");
        read_opt(s, "elm_bias_low", cfg.sampler.elm_bias_low, "sampler");
        read_opt(s, "elm_bias_high", cfg.sampler.elm_bias_high, "sampler");
        read_opt(s, "resample_duplicates", cfg.sampler.resample_duplicates, "sampler");
        read_opt(s, "max_retries", cfg.sampler.max_retries, "sampler");
        read_opt(s, "pool_cap", cfg.sampler.pool_cap, "sampler");
    }
    if (auto it = doc.find("solver"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "solver", {"method", "rcond", "ridge_lambda", "block_samples", "policy"});
        if (auto m = parse_enum(s, "method", "solver", solve_method_from_string)) cfg.solver.method = *m;
        read_opt(s, "rcond", cfg.solver.rcond, "solver");
        read_opt(s, "ridge_lambda", cfg.solver.ridge_lambda, "solver");
        read_opt(s, "block_samples", cfg.solver.block_samples, "solver");
        if (auto p = parse_enum(s, "policy", "solver", policy_from_string)) cfg.solver.policy = *p;
    }
    if (auto it = doc.find("integration"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "integration", {"dt", "steps", "fp_tol", "fp_max_iter", "separable_shortcut"});
        read_opt(s, "dt", cfg.integration.dt, "integration");
        read_opt(s, "steps", cfg.integration.steps, "integration");
        read_opt(s, "fp_tol", cfg.integration.options.fp_tol, "integration");
        read_opt(s, "fp_max_iter", cfg.integration.options.fp_max_iter, "integration");
        read_opt(s, "separable_shortcut", cfg.integration.options.use_separable_shortcut, "integration");
    }
    if (auto it = doc.find("zero_shot"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "zero_shot", {"train_sizes", "test_sizes", "test_count", "max_nodes", "methods"});
        read_opt(s, "train_sizes", cfg.zero_shot.train_sizes, "zero_shot");
        read_opt(s, "test_sizes", cfg.zero_shot.test_sizes, "zero_shot");
        read_opt(s, "test_count", cfg.zero_shot.test_count, "zero_shot");
        read_opt(s, "max_nodes", cfg.zero_shot.max_nodes, "zero_shot");
        if (auto m = s.find("methods"); m != s.end()) {
            std::vector<std::string> names;
            read_opt(s, "methods", names, "zero_shot");
            cfg.zero_shot.methods.clear();
            for (const auto& n : names) {
                try {
                    cfg.zero_shot.methods.push_back(sampler_method_from_string(n));
                } catch (const std::exception&) {
                    throw ConfigError("config: bad value for 'zero_shot.methods'");
                }
            }
        }
    }
    if (auto it = doc.find("ablation"); it != doc.end()) {
        const auto& s = *it;
        check_keys(s, "ablation", {"d_h", "widths", "axis"});
        read_opt(s, "d_h", cfg.ablation.d_h, "ablation");
        read_opt(s, "widths", cfg.ablation.widths, "ablation");
        if (s.contains("axis")) {
            std::string axis;
            read_opt(s, "axis", axis, "ablation");
            if (axis == "message") cfg.ablation.axis = AblationAxis::message;
            else if (axis == "readout") cfg.ablation.axis = AblationAxis::readout;
            else throw ConfigError("config: bad value for 'ablation.axis'");
        }
    }
    cfg.dims.dim = cfg.system.dim;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& name_or_path) {
    if (is_preset(name_or_path)) return preset_config(name_or_path);
    std::string text;
    try {
        text = read_text_file(name_or_path);
    } catch (const std::runtime_error&) {
        throw ConfigError("config: '" + name_or_path + "' is neither a preset nor a readable file");
    }
    return config_from_string(text);
}

}  // namespace rfhgn
