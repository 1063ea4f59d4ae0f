#include "esparse/signals.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "esparse/error.hpp"

namespace esparse {

namespace {

constexpr const char* kColumns[] = {"t", "q", "qdot", "qddot", "zddot"};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

double SignalSet::dt() const {
    if (t.size() < 2) throw InvalidArgument("signal set needs at least two samples");
    return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

void SignalSet::validate() const {
    const std::size_t n = t.size();
    if (n < 2) throw InvalidArgument("signal set needs at least two samples");
    if (q.size() != n || qdot.size() != n || qddot.size() != n || zddot.size() != n) {
        throw InvalidArgument("signal columns have different lengths");
    }
    const double step = dt();
    if (!(step > 0.0)) throw InvalidArgument("time column must be strictly increasing");
    for (std::size_t i = 1; i < n; ++i) {
        const double gap = t[i] - t[i - 1];
        if (!(gap > 0.0) || std::abs(gap - step) > 1e-6 * step) {
            throw InvalidArgument("time column is not uniformly sampled near row " +
                                  std::to_string(i));
        }
    }
    if (split == 0 || split >= n) {
        throw InvalidArgument("split index " + std::to_string(split) + " must lie in (0, " +
                              std::to_string(n) + ")");
    }
}

void write_signals_csv(const SignalSet& signals, std::ostream& out) {
    out << kSignalCsvHeader << '\n';
    char buffer[160];
    for (std::size_t i = 0; i < signals.size(); ++i) {
        std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g,%.17g,%.17g\n", signals.t[i],
                      signals.q[i], signals.qdot[i], signals.qddot[i], signals.zddot[i]);
        out << buffer;
    }
}

void write_signals_csv(const SignalSet& signals, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_signals_csv(signals, out);
    if (!out) throw DataError("failed writing " + path.string());
}

SignalSet read_signals_csv(std::istream& in, std::size_t split) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("signal CSV is empty");
    const auto header = split_fields(line);
    for (std::size_t c = 0; c < 5; ++c) {
        if (c >= header.size() || header[c] != kColumns[c]) {
            bool present = false;
            for (const auto& h : header) present = present || h == kColumns[c];
            throw DataError(std::string("signal CSV header must be '") + kSignalCsvHeader + "'; " +
                            (present ? "column out of order: " : "missing column: ") +
                            kColumns[c]);
        }
    }
    if (header.size() != 5) throw DataError("signal CSV has unexpected extra columns");

    SignalSet signals;
    std::vector<double>* columns[] = {&signals.t, &signals.q, &signals.qdot, &signals.qddot,
                                      &signals.zddot};
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() != 5) {
            throw DataError("row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected 5");
        }
        for (std::size_t c = 0; c < 5; ++c) {
            const std::string& text = fields[c];
            double value = 0.0;
            const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
            if (result.ec != std::errc() || result.ptr != text.data() + text.size() ||
                !std::isfinite(value)) {
                throw DataError("row " + std::to_string(row) + ", column " + kColumns[c] +
                                ": invalid number '" + text + "'");
            }
            columns[c]->push_back(value);
        }
    }
    signals.split = split;
    try {
        signals.validate();
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }
    return signals;
}

SignalSet read_signals_csv(const std::filesystem::path& path, std::size_t split) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_signals_csv(in, split);
}

std::uint64_t content_hash(const SignalSet& signals) {
    std::uint64_t hash = 14695981039346656037ULL;
    auto mix = [&hash](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            hash ^= p[i];
            hash *= 1099511628211ULL;
        }
    };
    for (const auto* column :
         {&signals.t, &signals.q, &signals.qdot, &signals.qddot, &signals.zddot}) {
        mix(column->data(), column->size() * sizeof(double));
    }
    const std::uint64_t split = signals.split;
    mix(&split, sizeof(split));
    return hash;
}

}  // namespace esparse
