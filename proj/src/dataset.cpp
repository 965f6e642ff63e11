#include "isac/dataset.hpp"

#include <fstream>
#include <sstream>
#include <type_traits>

namespace isac {

using nlohmann::json;

namespace {

json complex_pair(cd z)
{
    return json::array({z.real(), z.imag()});
}

cd complex_from(const json& j)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw FormatError("complex values must be [re, im] pairs");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json complex_list(const std::vector<cd>& v)
{
    json out = json::array();
    for (cd z : v) {
        out.push_back(complex_pair(z));
    }
    return out;
}

std::vector<cd> complex_list_from(const json& j, std::size_t expected, const char* what)
{
    if (!j.is_array() || j.size() != expected) {
        throw FormatError(std::string(what) + ": expected " + std::to_string(expected) +
                          " entries");
    }
    std::vector<cd> out;
    for (const json& e : j) {
        out.push_back(complex_from(e));
    }
    return out;
}

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw FormatError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

double number(const json& j, const char* key)
{
    const json& v = field(j, key);
    if (!v.is_number()) {
        throw FormatError(std::string("field '") + key + "' is not a number");
    }
    return v.get<double>();
}

json angle_pair(double theta, double phi)
{
    return json::array({theta, phi});
}

// Field table shared by both directions of the config mapping.
template <class F>
void each_config_field(SystemConfig& c, F&& f)
{
    f("n_th", c.n_th);
    f("n_tv", c.n_tv);
    f("n_r", c.n_r);
    f("q_th", c.q_th);
    f("q_tv", c.q_tv);
    f("num_subcarriers", c.num_subcarriers);
    f("fc", c.fc);
    f("bandwidth", c.bandwidth);
    f("ttd_bits", c.ttd_bits);
    f("t_max", c.t_max);
    f("p_total", c.p_total);
    f("sigma_c2", c.sigma_c2);
    f("sigma_s2", c.sigma_s2);
    f("sigma_beta", c.sigma_beta);
    f("sigma_alpha", c.sigma_alpha);
    f("tau_max", c.tau_max);
    f("num_targets", c.num_targets);
    f("dict_size", c.dict_size);
}

} // namespace

json config_to_json(const SystemConfig& cfg)
{
    SystemConfig c = cfg;
    json out = json::object();
    each_config_field(c, [&](const char* k, auto& v) { out[k] = v; });
    return out;
}

SystemConfig config_from_json(const json& j, const SystemConfig& base)
{
    if (!j.is_object()) {
        throw ConfigError("system config must be a JSON object");
    }
    SystemConfig c = base;
    std::size_t known = 0;
    each_config_field(c, [&](const char* k, auto& v) {
        if (!j.contains(k)) {
            return;
        }
        ++known;
        const json& e = j.at(k);
        using T = std::decay_t<decltype(v)>;
        if (!e.is_number() || (std::is_integral_v<T> && !e.is_number_integer())) {
            throw ConfigError(std::string("config field '") + k + "' has the wrong type");
        }
        v = e.get<T>();
    });
    if (known != j.size()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool ok = false;
            each_config_field(c, [&](const char* k, auto&) { ok = ok || it.key() == k; });
            if (!ok) {
                throw ConfigError("unknown config field '" + it.key() + "'");
            }
        }
    }
    c.validate();
    return c;
}

json dataset_to_json(const Dataset& d)
{
    json samples = json::array();
    for (const DatasetSample& s : d.samples) {
        const ChannelRealization& r = s.realization;
        json targets = json::array();
        json alpha = json::array();
        for (const Target& t : r.scene.targets) {
            targets.push_back(angle_pair(t.theta, t.phi));
            alpha.push_back(complex_list(t.alpha));
        }
        json e{{"seed", r.seed},
               {"comm",
                {{"angles", angle_pair(r.comm.theta, r.comm.phi)},
                 {"tau", r.comm.tau},
                 {"beta", complex_list(r.comm.beta)}}},
               {"scene", {{"angles", targets}, {"alpha", alpha}}},
               {"msia", r.msia}};
        if (s.normalizers) {
            e["normalizers"] = {{"cor_star", s.normalizers->cor_star},
                                {"r_max", s.normalizers->r_max},
                                {"crb_min", s.normalizers->crb_min}};
        }
        samples.push_back(std::move(e));
    }
    return json{{"format", "isac-dataset"},
                {"version", kDatasetVersion},
                {"cfg", config_to_json(d.cfg)},
                {"samples", std::move(samples)}};
}

Dataset dataset_from_json(const json& j)
{
    if (!j.is_object() || j.value("format", std::string()) != "isac-dataset") {
        throw FormatError("not an isac dataset");
    }
    const json& ver = field(j, "version");
    if (!ver.is_number_integer() || ver.get<int>() != kDatasetVersion) {
        throw FormatError("dataset version " + ver.dump() + " unsupported (expected " +
                          std::to_string(kDatasetVersion) + ")");
    }
    Dataset d;
    try {
        d.cfg = config_from_json(field(j, "cfg"), SystemConfig{});
    } catch (const ConfigError& e) {
        throw FormatError(std::string("dataset config: ") + e.what());
    }
    const auto m = static_cast<std::size_t>(d.cfg.num_subcarriers);
    const json& samples = field(j, "samples");
    if (!samples.is_array()) {
        throw FormatError("'samples' must be an array");
    }
    for (const json& e : samples) {
        DatasetSample s;
        ChannelRealization& r = s.realization;
        const json& seed = field(e, "seed");
        if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
            throw FormatError("seed must be an integer");
        }
        r.seed = seed.get<std::uint64_t>();
        const json& comm = field(e, "comm");
        const json& ca = field(comm, "angles");
        if (!ca.is_array() || ca.size() != 2) {
            throw FormatError("comm.angles must be [theta, phi]");
        }
        r.comm.theta = ca[0].get<double>();
        r.comm.phi = ca[1].get<double>();
        r.comm.tau = number(comm, "tau");
        r.comm.beta = complex_list_from(field(comm, "beta"), m, "comm.beta");
        const json& scene = field(e, "scene");
        const json& ta = field(scene, "angles");
        const json& al = field(scene, "alpha");
        if (!ta.is_array() || !al.is_array() || ta.size() != al.size()) {
            throw FormatError("scene.angles and scene.alpha must have one entry per target");
        }
        for (std::size_t k = 0; k < ta.size(); ++k) {
            if (!ta[k].is_array() || ta[k].size() != 2) {
                throw FormatError("target angles must be [theta, phi]");
            }
            Target t;
            t.theta = ta[k][0].get<double>();
            t.phi = ta[k][1].get<double>();
            t.alpha = complex_list_from(al[k], m, "scene.alpha");
            r.scene.targets.push_back(std::move(t));
        }
        r.msia = number(e, "msia");
        if (e.contains("normalizers")) {
            const json& n = e.at("normalizers");
            s.normalizers = Normalizers{number(n, "cor_star"), number(n, "r_max"),
                                        number(n, "crb_min")};
        }
        try {
            r.comm.materialize(d.cfg);
            r.scene.materialize(d.cfg);
        } catch (const std::exception& ex) {
            throw FormatError(std::string("sample cannot be rebuilt: ") + ex.what());
        }
        d.samples.push_back(std::move(s));
    }
    return d;
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

void export_dataset(const Dataset& d, const std::string& path)
{
    write_text_file(path, dataset_to_json(d).dump() + "\n");
}

Dataset import_dataset(const std::string& path)
{
    try {
        return dataset_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

json state_to_json(const PrecoderState& s)
{
    json t = json::array();
    for (Eigen::Index i = 0; i < s.ttd.delays.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < s.ttd.delays.cols(); ++k) {
            row.push_back(s.ttd.delays(i, k));
        }
        t.push_back(std::move(row));
    }
    json phases(std::vector<double>(s.ps.phases.data(), s.ps.phases.data() + s.ps.phases.size()));
    json p(std::vector<double>(s.power.p.data(), s.power.p.data() + s.power.p.size()));
    return json{{"T", t}, {"varphi", phases}, {"p", p}};
}

PrecoderState state_from_json(const json& j, const SystemConfig& cfg)
{
    try {
        PrecoderState s;
        s.ttd = TtdGrid::zeros(cfg);
        const json& t = field(j, "T");
        if (!t.is_array() || static_cast<int>(t.size()) != cfg.q_th) {
            throw FormatError("T must have Q_th rows");
        }
        for (int i = 0; i < cfg.q_th; ++i) {
            if (!t[i].is_array() || static_cast<int>(t[i].size()) != cfg.q_tv) {
                throw FormatError("T rows must have Q_tv entries");
            }
            for (int k = 0; k < cfg.q_tv; ++k) {
                s.ttd.delays(i, k) = t[i][k].get<double>();
            }
        }
        const auto phases = field(j, "varphi").get<std::vector<double>>();
        const auto p = field(j, "p").get<std::vector<double>>();
        if (static_cast<int>(phases.size()) != cfg.n_t()) {
            throw FormatError("varphi must have N_t entries");
        }
        if (static_cast<int>(p.size()) != cfg.num_subcarriers) {
            throw FormatError("p must have M entries");
        }
        s.ps.phases = Eigen::Map<const RVec>(phases.data(), cfg.n_t());
        s.power.p = Eigen::Map<const RVec>(p.data(), cfg.num_subcarriers);
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("precoder state: ") + e.what());
    }
}

} // namespace isac
