// Text formats: RFC 4180 CSV emission and parsing with full-precision
// doubles, the JSON document for a functional parameter triple, and flat
// configuration files in JSON or a key = value subset of TOML.
#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpspin/errors.hpp"
#include "lpspin/parisi.hpp"

namespace lpspin {

// Shortest representation that round-trips a double (17 significant digits).
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
    }
    out += "\r\n";
    return out;
}

// Parses a full CSV text into rows of unescaped fields. Accepts both CRLF
// and bare LF record ends; quoted fields may contain either plus commas.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&]() {
        if (field_started || !field.empty() || !row.empty()) {
            end_field();
            rows.push_back(row);
            row.clear();
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
            field_started = true;  // the next field exists even if empty
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            end_row();
            ++i;
        } else if (c == '\n') {
            end_row();
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    require_input(!in_quotes, "parse_csv: unterminated quoted field");
    end_row();
    return rows;
}

// Parameter triple document with a fixed key order so identical parameters
// serialize to identical bytes.
inline std::string parisi_doc_to_json(const lagrange_multiplier& lam,
                                      const discrete_measure& weights, const path& pi) {
    nlohmann::ordered_json doc;
    doc["kappa"] = pi.kappa;
    doc["r"] = pi.levels();
    doc["q"] = pi.q;
    nlohmann::ordered_json gammas = nlohmann::ordered_json::array();
    for (const sym_matrix& g : pi.gamma) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < g.n; ++i) {
            nlohmann::ordered_json r_row = nlohmann::ordered_json::array();
            for (std::size_t j = 0; j < g.n; ++j) r_row.push_back(g(i, j));
            rows.push_back(r_row);
        }
        gammas.push_back(rows);
    }
    doc["gamma"] = gammas;
    doc["weights"] = weights.w;
    doc["lambda"] = lam.v;
    doc["flavor"] =
        weights.flavor == measure_flavor::probability ? "probability" : "finite";
    return doc.dump(2);
}

inline void parisi_doc_from_json(const std::string& text, lagrange_multiplier& lam,
                                 discrete_measure& weights, path& pi) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("parisi_doc_from_json: ") + e.what());
    }
    try {
        std::size_t kappa = doc.at("kappa").get<std::size_t>();
        std::size_t r = doc.at("r").get<std::size_t>();
        pi.kappa = kappa;
        pi.q = doc.at("q").get<std::vector<double>>();
        require_input(pi.q.size() == r + 1, "parisi_doc_from_json: q length must be r+1");
        pi.gamma.clear();
        for (const nlohmann::json& g : doc.at("gamma")) {
            sym_matrix m(kappa);
            require_input(g.size() == kappa, "parisi_doc_from_json: gamma row count");
            for (std::size_t i = 0; i < kappa; ++i) {
                require_input(g[i].size() == kappa, "parisi_doc_from_json: gamma column count");
                for (std::size_t j = 0; j < kappa; ++j) m(i, j) = g[i][j].get<double>();
            }
            pi.gamma.push_back(sym_matrix::from_general(m.as_mat()));
        }
        weights.q = pi.q;
        weights.w = doc.at("weights").get<std::vector<double>>();
        std::string flavor = doc.at("flavor").get<std::string>();
        require_input(flavor == "finite" || flavor == "probability",
                      "parisi_doc_from_json: unknown flavor");
        weights.flavor = flavor == "probability" ? measure_flavor::probability
                                                 : measure_flavor::finite;
        lam = lagrange_multiplier(kappa);
        std::vector<double> lv = doc.at("lambda").get<std::vector<double>>();
        require_input(lv.size() == lam.v.size(), "parisi_doc_from_json: lambda length");
        lam.v = lv;
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("parisi_doc_from_json: ") + e.what());
    }
    pi.validate();
    weights.validate();
}

// Flat configuration: string keys to scalar strings. JSON files must hold a
// single flat object; the TOML subset accepts comment lines, blank lines,
// and key = value pairs with optional double quotes around the value.
inline std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                            bool as_json) {
    std::map<std::string, std::string> out;
    if (as_json) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw input_error(std::string("config: ") + e.what());
        }
        require_input(doc.is_object(), "config: JSON root must be an object");
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            const nlohmann::json& v = it.value();
            if (v.is_string())
                out[it.key()] = v.get<std::string>();
            else if (v.is_boolean())
                out[it.key()] = v.get<bool>() ? "true" : "false";
            else if (v.is_number_integer())
                out[it.key()] = std::to_string(v.get<long long>());
            else if (v.is_number())
                out[it.key()] = format_double(v.get<double>());
            else
                throw input_error("config: value for '" + it.key() + "' must be scalar");
        }
        return out;
    }
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos || line[a] == '#') continue;
        std::size_t eq = line.find('=');
        require_input(eq != std::string::npos && eq > a,
                      "config: line " + std::to_string(line_no) + " is not key = value");
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            return s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        require_input(!key.empty(), "config: empty key on line " + std::to_string(line_no));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        out[key] = value;
    }
    return out;
}

inline std::map<std::string, std::string> load_config_file(const std::string& file_path) {
    std::ifstream in(file_path, std::ios::binary);
    require_input(in.good(), "config: cannot open " + file_path);
    std::stringstream buf;
    buf << in.rdbuf();
    bool as_json = file_path.size() >= 5 &&
                   file_path.compare(file_path.size() - 5, 5, ".json") == 0;
    return parse_config_text(buf.str(), as_json);
}

} // namespace lpspin
