#include "signalroot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace signalroot {

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw std::runtime_error("parse error, line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto a = field.find_first_not_of(" \t\r");
        const auto b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    return out;
}

long long to_count(const std::string& s, std::size_t line, const char* name) {
    long long v = 0;
    try {
        std::size_t pos = 0;
        v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        parse_fail(line, std::string(name) + ": not an integer: '" + s + "'");
    }
    if (v < 0) parse_fail(line, std::string(name) + " must be a non-negative integer");
    return v;
}

double to_positive(const std::string& s, std::size_t line, const char* name) {
    double v = 0.0;
    try {
        std::size_t pos = 0;
        v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        parse_fail(line, std::string(name) + ": not a number: '" + s + "'");
    }
    if (!(v > 0.0)) parse_fail(line, std::string(name) + " must be positive");
    return v;
}

void check_channel_order(long long channel, std::size_t expected, std::size_t line) {
    if (channel != static_cast<long long>(expected))
        parse_fail(line, "channel indices must be contiguous from 1 (expected " +
                             std::to_string(expected) + ", got " + std::to_string(channel) + ")");
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

Dataset parse_dataset_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error("parse error: empty input");
    ++lineno;
    {
        auto header = split_csv(line);
        const std::vector<std::string> expect = {"channel", "y1", "y2", "y3", "t", "u"};
        if (header != expect)
            parse_fail(lineno, "expected header 'channel,y1,y2,y3,t,u'");
    }
    Dataset data;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 6) parse_fail(lineno, "expected 6 comma-separated fields");
        check_channel_order(to_count(fields[0], lineno, "channel"), data.size() + 1, lineno);
        ChannelData c;
        c.y1 = to_count(fields[1], lineno, "y1");
        c.y2 = to_count(fields[2], lineno, "y2");
        c.y3 = to_count(fields[3], lineno, "y3");
        c.t = to_positive(fields[4], lineno, "t");
        c.u = to_positive(fields[5], lineno, "u");
        data.channels.push_back(c);
    }
    data.validate();
    return data;
}

Dataset parse_dataset_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("parse error: ") + e.what());
    }
    if (!j.is_array() || j.empty())
        throw std::runtime_error("parse error: expected a non-empty JSON array of channel records");
    Dataset data;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& rec = j[i];
        for (const char* key : {"channel", "y1", "y2", "y3", "t", "u"})
            if (!rec.contains(key))
                throw std::runtime_error("parse error: record " + std::to_string(i + 1) +
                                         " missing field '" + key + "'");
        check_channel_order(rec["channel"].get<long long>(), data.size() + 1, i + 1);
        ChannelData c;
        c.y1 = rec["y1"].get<long long>();
        c.y2 = rec["y2"].get<long long>();
        c.y3 = rec["y3"].get<long long>();
        c.t = rec["t"].get<double>();
        c.u = rec["u"].get<double>();
        data.channels.push_back(c);
    }
    data.validate();
    return data;
}

Dataset load_dataset(const std::string& path, const std::string& format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::string fmt = format;
    if (fmt == "auto") {
        const auto dot = path.find_last_of('.');
        const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
        fmt = ext == "json" ? "json" : "csv";
    }
    if (fmt == "csv") return parse_dataset_csv(in);
    if (fmt == "json") return parse_dataset_json(in);
    throw std::invalid_argument("unknown input format: " + format);
}

// ---------------------------------------------------------------------------
// Inference report

nlohmann::json report_to_json(const InferenceReport& report) {
    nlohmann::json j;
    j["n_channels"] = report.n_channels;
    j["psi_hat"] = report.psi_hat;
    j["profile_information"] = report.profile_information;
    j["psi_lower_limit"] = report.psi_lower_limit;
    j["mle_boundary"] = report.mle_boundary;
    j["mle_iterations"] = report.mle_iterations;
    j["monotonicity_violations"] = report.monotonicity_violations;
    j["prior"] = report.prior;
    j["methods"] = nlohmann::json::array();
    for (const auto& m : report.methods) {
        nlohmann::json jm;
        jm["method"] = method_name(m.method);
        jm["median_unbiased"] = m.median_unbiased;
        jm["fallback_used"] = m.fallback_used;
        jm["p_values"] = nlohmann::json::array();
        for (const auto& p : m.p_values)
            jm["p_values"].push_back({{"psi0", p.psi0}, {"p", p.p}});
        jm["bounds"] = nlohmann::json::array();
        for (const auto& b : m.bounds)
            jm["bounds"].push_back({{"alpha", b.alpha},
                                    {"lower_raw", b.lower_raw},
                                    {"lower_clamped", b.lower_clamped},
                                    {"upper_raw", b.upper_raw},
                                    {"upper_clamped", b.upper_clamped},
                                    {"model_doubt", b.model_doubt}});
        j["methods"].push_back(jm);
    }
    return j;
}

InferenceReport report_from_json(const nlohmann::json& j) {
    InferenceReport report;
    report.n_channels = j.at("n_channels").get<std::size_t>();
    report.psi_hat = j.at("psi_hat").get<double>();
    report.profile_information = j.at("profile_information").get<double>();
    report.psi_lower_limit = j.at("psi_lower_limit").get<double>();
    report.mle_boundary = j.at("mle_boundary").get<bool>();
    report.mle_iterations = j.at("mle_iterations").get<int>();
    report.monotonicity_violations = j.at("monotonicity_violations").get<int>();
    report.prior = j.at("prior").get<std::string>();
    for (const auto& jm : j.at("methods")) {
        MethodReport m;
        const auto method = method_from_name(jm.at("method").get<std::string>());
        if (!method) throw std::runtime_error("report: unknown method label");
        m.method = *method;
        m.median_unbiased = jm.at("median_unbiased").get<double>();
        m.fallback_used = jm.at("fallback_used").get<bool>();
        for (const auto& jp : jm.at("p_values"))
            m.p_values.push_back({jp.at("psi0").get<double>(), jp.at("p").get<double>()});
        for (const auto& jb : jm.at("bounds")) {
            BoundEntry b;
            b.alpha = jb.at("alpha").get<double>();
            b.lower_raw = jb.at("lower_raw").get<double>();
            b.lower_clamped = jb.at("lower_clamped").get<double>();
            b.upper_raw = jb.at("upper_raw").get<double>();
            b.upper_clamped = jb.at("upper_clamped").get<double>();
            b.model_doubt = jb.at("model_doubt").get<bool>();
            m.bounds.push_back(b);
        }
        report.methods.push_back(std::move(m));
    }
    return report;
}

std::string report_to_text(const InferenceReport& report) {
    std::ostringstream out;
    out << "channels: " << report.n_channels << "\n";
    out << "psi_hat: " << fmt6(report.psi_hat)
        << "   j_p(psi_hat): " << fmt6(report.profile_information)
        << "   extended lower limit: " << fmt6(report.psi_lower_limit) << "\n";
    if (report.mle_boundary)
        out << "note: MLE on the parameter-space edge; higher-order methods fall back to r\n";
    for (const auto& m : report.methods) {
        out << "\nmethod " << method_name(m.method)
            << (m.fallback_used ? "  [fallback to r used]" : "") << "\n";
        out << "  median-unbiased estimate: " << fmt6(m.median_unbiased) << "\n";
        for (const auto& p : m.p_values)
            out << "  p-value at psi0=" << fmt6(p.psi0) << ": " << fmt6(p.p) << "\n";
        for (const auto& b : m.bounds) {
            out << "  level " << fmt6(1.0 - b.alpha) << " bounds: lower " << fmt6(b.lower_raw)
                << " (clamped " << fmt6(b.lower_clamped) << "), upper " << fmt6(b.upper_raw)
                << " (clamped " << fmt6(b.upper_clamped) << ")";
            if (b.model_doubt)
                out << "  ** upper bound < 0: no physical value supported, model in doubt";
            out << "\n";
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Coverage results

nlohmann::json coverage_to_json(const CoverageResult& result) {
    nlohmann::json j;
    nlohmann::json cfg;
    cfg["psi_true"] = result.config.psi_true;
    cfg["beta"] = result.config.beta;
    cfg["gamma"] = result.config.gamma;
    cfg["t"] = result.config.t;
    cfg["u"] = result.config.u;
    cfg["replications"] = result.config.replications;
    cfg["levels"] = result.config.levels;
    cfg["methods"] = nlohmann::json::array();
    for (Method m : result.config.methods) cfg["methods"].push_back(method_name(m));
    cfg["seed"] = result.config.seed;
    j["config"] = cfg;
    j["fallback_replicates"] = result.fallback_replicates;
    j["failed_replicates"] = result.failed_replicates;
    j["effective_replications"] = result.effective_replications;
    j["cells"] = nlohmann::json::array();
    for (std::size_t m = 0; m < result.config.methods.size(); ++m) {
        for (std::size_t l = 0; l < result.config.levels.size(); ++l) {
            const auto& cell = result.cells[m][l];
            j["cells"].push_back({{"method", method_name(result.config.methods[m])},
                                  {"level", result.config.levels[l]},
                                  {"successes", cell.successes},
                                  {"coverage", cell.coverage},
                                  {"std_error", cell.std_error},
                                  {"outside_3se", cell.outside_3se}});
        }
    }
    return j;
}

std::string coverage_to_text(const CoverageResult& result) {
    std::ostringstream out;
    out << "coverage study: psi_true=" << fmt6(result.config.psi_true)
        << "  R=" << result.config.replications << "  seed=" << result.config.seed << "\n";
    out << "failed fits: " << result.failed_replicates
        << "   fallback-to-r replicates: " << result.fallback_replicates << "\n";
    out << "level";
    for (std::size_t m = 0; m < result.config.methods.size(); ++m)
        out << "\t" << method_name(result.config.methods[m]);
    out << "\n";
    for (std::size_t l = 0; l < result.config.levels.size(); ++l) {
        char lvl[32];
        std::snprintf(lvl, sizeof(lvl), "%.4f", result.config.levels[l]);
        out << lvl;
        for (std::size_t m = 0; m < result.config.methods.size(); ++m) {
            const auto& cell = result.cells[m][l];
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.4f%s", cell.coverage,
                          cell.outside_3se ? "*" : " ");
            out << "\t" << buf;
        }
        out << "\n";
    }
    out << "(* differs from the nominal level by more than 3 simulation SEs)\n";
    return out.str();
}

void write_table_tsv(std::ostream& out, const std::vector<TableRow>& rows) {
    out << "psi\tphi_r\tphi_rstar\tphi_rstar_bayes\tfallback_rstar\tfallback_bayes\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.10g\t%.10g\t%.10g\t%.10g\t%d\t%d\n", r.psi,
                      r.phi_r, r.phi_rstar, r.phi_rstar_bayes, r.fallback_rstar ? 1 : 0,
                      r.fallback_bayes ? 1 : 0);
        out << buf;
    }
}

}  // namespace signalroot
