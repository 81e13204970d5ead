#pragma once

// Text formats: ratings CSV ingestion (with the optional popularity/activity
// filters), draw-file persistence, prediction and evaluation CSVs, the merge
// manifest, and MF model files. Decimals are written with shortest
// round-trip encoding so re-parsing reproduces bit-identical values.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dfa/consensus.hpp"
#include "dfa/core.hpp"
#include "dfa/mf.hpp"
#include "dfa/predict.hpp"

namespace dfa {

inline std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad decimal: '" + std::string(s) + "'");
    return v;
}

inline long parse_long(std::string_view s) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad integer: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_view(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

// ---------------------------------------------------------------------------
// ratings CSV: optional "# users=M items=N" header, then "user,item,rating"
// with 1-based ids

struct IngestOptions {
    int top_items = 0;         // keep the N most-rated items (0 = no filter)
    int min_user_ratings = 0;  // drop users with fewer ratings (0 = no filter)
};

struct IngestResult {
    RatingMatrix ratings;
    std::vector<int> user_ids;  // dense index -> original 1-based id
    std::vector<int> item_ids;
};

inline void write_ratings_csv(const std::string& path, const RatingMatrix& ratings) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# users=" << ratings.users() << " items=" << ratings.items() << "\n";
    for (const auto& e : ratings.entries())
        out << (e.user + 1) << ',' << (e.item + 1) << ',' << e.rating << "\n";
}

inline IngestResult ingest_ratings(const std::string& path, const IngestOptions& opts = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    long line_no = 0;
    int hinted_m = 0, hinted_n = 0;
    struct Raw {
        int user, item, rating;
    };
    std::vector<Raw> raw;
    std::map<std::pair<int, int>, long> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("users=", 0) == 0) hinted_m = static_cast<int>(parse_long(tok.substr(6)));
                if (tok.rfind("items=", 0) == 0) hinted_n = static_cast<int>(parse_long(tok.substr(6)));
            }
            continue;
        }
        const auto parts = split_view(line, ',');
        if (parts.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected user,item,rating");
        int u, i, r;
        try {
            u = static_cast<int>(parse_long(parts[0]));
            i = static_cast<int>(parse_long(parts[1]));
            r = static_cast<int>(parse_long(parts[2]));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed line");
        }
        if (u < 1 || i < 1)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": ids must be >= 1");
        if (r < 1 || r > 5)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": rating outside 1-5");
        const auto [it, fresh] = seen.emplace(std::make_pair(u, i), line_no);
        if (!fresh)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate entry for user " +
                                     std::to_string(u) + ", item " + std::to_string(i) +
                                     " (first at line " + std::to_string(it->second) + ")");
        raw.push_back({u, i, r});
    }

    // optional filters: keep the most-rated items, then active-enough users
    if (opts.top_items > 0) {
        std::map<int, long> item_count;
        for (const auto& e : raw) ++item_count[e.item];
        std::vector<std::pair<long, int>> ranked;  // (-count, id) so ties keep lower ids
        for (const auto& [id, c] : item_count) ranked.emplace_back(-c, id);
        std::sort(ranked.begin(), ranked.end());
        std::map<int, bool> keep;
        for (std::size_t j = 0; j < ranked.size() && j < static_cast<std::size_t>(opts.top_items); ++j)
            keep[ranked[j].second] = true;
        std::vector<Raw> next;
        for (const auto& e : raw)
            if (keep.count(e.item)) next.push_back(e);
        raw = std::move(next);
    }
    if (opts.min_user_ratings > 0) {
        std::map<int, long> user_count;
        for (const auto& e : raw) ++user_count[e.user];
        std::vector<Raw> next;
        for (const auto& e : raw)
            if (user_count[e.user] >= opts.min_user_ratings) next.push_back(e);
        raw = std::move(next);
    }

    IngestResult out{RatingMatrix(0, 0, {}), {}, {}};
    const bool filtered = opts.top_items > 0 || opts.min_user_ratings > 0;
    if (hinted_m > 0 && hinted_n > 0 && !filtered) {
        // header pins the id space; keep ids as dense indices
        out.user_ids.resize(hinted_m);
        out.item_ids.resize(hinted_n);
        for (int u = 0; u < hinted_m; ++u) out.user_ids[u] = u + 1;
        for (int i = 0; i < hinted_n; ++i) out.item_ids[i] = i + 1;
        std::vector<RatingEntry> entries;
        for (const auto& e : raw) {
            if (e.user > hinted_m || e.item > hinted_n)
                throw std::runtime_error(path + ": id exceeds header dimensions");
            entries.push_back({e.user - 1, e.item - 1, e.rating});
        }
        out.ratings = RatingMatrix(hinted_m, hinted_n, std::move(entries));
        return out;
    }
    std::map<int, int> user_map, item_map;
    for (const auto& e : raw) {
        user_map.emplace(e.user, 0);
        item_map.emplace(e.item, 0);
    }
    for (auto& [id, dense] : user_map) {
        dense = static_cast<int>(out.user_ids.size());
        out.user_ids.push_back(id);
    }
    for (auto& [id, dense] : item_map) {
        dense = static_cast<int>(out.item_ids.size());
        out.item_ids.push_back(id);
    }
    std::vector<RatingEntry> entries;
    for (const auto& e : raw) entries.push_back({user_map[e.user], item_map[e.item], e.rating});
    out.ratings = RatingMatrix(static_cast<int>(out.user_ids.size()),
                               static_cast<int>(out.item_ids.size()), std::move(entries));
    return out;
}

// ---------------------------------------------------------------------------
// draw files: one header line, then one draw per line with fields
//   iteration K A_bits B_bits theta rho tau pB
// A/B are row-major bitstrings, theta/rho comma-separated decimals; empty
// bitstrings and lists are written as "-".

inline std::string encode_bits(const BinaryMatrix& mat) {
    if (mat.rows() * mat.cols() == 0) return "-";
    std::string s;
    s.reserve(static_cast<std::size_t>(mat.rows()) * mat.cols());
    for (int r = 0; r < mat.rows(); ++r)
        for (int c = 0; c < mat.cols(); ++c) s.push_back(mat(r, c) ? '1' : '0');
    return s;
}

inline BinaryMatrix decode_bits(std::string_view s, int rows, int cols) {
    BinaryMatrix mat(rows, cols);
    if (s == "-") {
        if (rows * cols != 0) throw std::runtime_error("draw file: missing bitstring");
        return mat;
    }
    if (s.size() != static_cast<std::size_t>(rows) * cols)
        throw std::runtime_error("draw file: bitstring length mismatch");
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const char ch = s[static_cast<std::size_t>(r) * cols + c];
            if (ch != '0' && ch != '1') throw std::runtime_error("draw file: bad bit");
            mat.set(r, c, ch == '1');
        }
    return mat;
}

inline std::string encode_list(const std::vector<double>& v) {
    if (v.empty()) return "-";
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j) s.push_back(',');
        s += fmt_double(v[j]);
    }
    return s;
}

inline std::vector<double> decode_list(std::string_view s) {
    if (s == "-") return {};
    std::vector<double> v;
    for (auto part : split_view(s, ',')) v.push_back(parse_double(part));
    return v;
}

inline void write_draws(const std::string& path, const std::vector<McmcDraw>& draws, int m, int n) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# dfa-draws v1 users=" << m << " items=" << n << "\n";
    for (const auto& d : draws) {
        out << d.iteration << ' ' << d.allocation.K() << ' ' << encode_bits(d.allocation.A) << ' '
            << encode_bits(d.allocation.B) << ' ' << encode_list(d.params.theta) << ' '
            << encode_list(d.params.rho) << ' ' << fmt_double(d.params.tau) << ' '
            << fmt_double(d.p_b) << "\n";
    }
}

inline std::vector<McmcDraw> read_draws(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# dfa-draws v1", 0) != 0)
        throw std::runtime_error(path + ": not a draw file");
    int m = -1, n = -1;
    {
        std::istringstream hs(line);
        std::string tok;
        while (hs >> tok) {
            if (tok.rfind("users=", 0) == 0) m = static_cast<int>(parse_long(tok.substr(6)));
            if (tok.rfind("items=", 0) == 0) n = static_cast<int>(parse_long(tok.substr(6)));
        }
    }
    if (m < 0 || n < 0) throw std::runtime_error(path + ": draw header missing dimensions");
    std::vector<McmcDraw> draws;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto parts = split_view(line, ' ');
        if (parts.size() != 8)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 8 fields");
        McmcDraw d;
        d.iteration = parse_long(parts[0]);
        const int K = static_cast<int>(parse_long(parts[1]));
        d.allocation = FeatureAllocation(decode_bits(parts[2], m, K), decode_bits(parts[3], n, K));
        d.params.theta = decode_list(parts[4]);
        d.params.rho = decode_list(parts[5]);
        d.params.tau = parse_double(parts[6]);
        d.p_b = parse_double(parts[7]);
        if (static_cast<int>(d.params.theta.size()) != K ||
            static_cast<int>(d.params.rho.size()) != n)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": inconsistent draw");
        draws.push_back(std::move(d));
    }
    return draws;
}

// ---------------------------------------------------------------------------
// predictions CSV

inline void write_predictions_csv(const std::string& path, const std::vector<PredictiveEntry>& preds,
                                  const std::vector<int>& predicted_ratings,
                                  const std::vector<int>& user_ids, const std::vector<int>& item_ids) {
    if (preds.size() != predicted_ratings.size())
        throw std::invalid_argument("write_predictions_csv: misaligned inputs");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "user,item,rating,score_mean,score_lo,score_hi,p1,p2,p3,p4,p5\n";
    for (std::size_t j = 0; j < preds.size(); ++j) {
        const auto& p = preds[j];
        out << user_ids.at(p.user) << ',' << item_ids.at(p.item) << ',' << predicted_ratings[j] << ','
            << fmt_double(p.score_mean) << ',' << fmt_double(p.score_lo) << ','
            << fmt_double(p.score_hi);
        for (double pr : p.probs) out << ',' << fmt_double(pr);
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// evaluation report CSV: metric,shard,value,ci_lo,ci_hi,n

inline void write_eval_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "metric,shard,value,ci_lo,ci_hi,n\n";
    for (const auto& row : report.rows)
        out << row.metric << ',' << row.shard << ',' << fmt_double(row.value) << ','
            << fmt_double(row.ci_lo) << ',' << fmt_double(row.ci_hi) << ',' << row.n << "\n";
}

// ---------------------------------------------------------------------------
// MF model file: "k m n" header then row-major P and Q

inline void write_mf_model(const std::string& path, const MfModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << model.k << ' ' << model.m << ' ' << model.n << "\n";
    for (int f = 0; f < model.k; ++f) {
        for (int u = 0; u < model.m; ++u) out << (u ? " " : "") << fmt_double(model.p(f, u));
        out << "\n";
    }
    for (int f = 0; f < model.k; ++f) {
        for (int i = 0; i < model.n; ++i) out << (i ? " " : "") << fmt_double(model.q(f, i));
        out << "\n";
    }
}

inline MfModel read_mf_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    MfModel model;
    in >> model.k >> model.m >> model.n;
    if (!in || model.k < 1) throw std::runtime_error(path + ": bad MF model header");
    model.P.resize(static_cast<std::size_t>(model.k) * model.m);
    model.Q.resize(static_cast<std::size_t>(model.k) * model.n);
    for (double& v : model.P)
        if (!(in >> v)) throw std::runtime_error(path + ": truncated MF model");
    for (double& v : model.Q)
        if (!(in >> v)) throw std::runtime_error(path + ": truncated MF model");
    return model;
}

}  // namespace dfa
