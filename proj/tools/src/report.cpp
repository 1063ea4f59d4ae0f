#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "esparse/error.hpp"
#include "esparse/expr.hpp"

namespace esparse::cli {

namespace {

double read_double(const std::string& text, int line) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, value);
    if (result.ec != std::errc() || result.ptr != end) {
        throw DataError("report line " + std::to_string(line) + ": invalid number '" + text + "'");
    }
    return value;
}

template <typename Int>
Int read_integer(const std::string& text, int line, int base = 10) {
    Int value{};
    const auto* end = text.data() + text.size();
    const auto result = std::from_chars(text.data(), end, value, base);
    if (result.ec != std::errc() || result.ptr != end) {
        throw DataError("report line " + std::to_string(line) + ": invalid integer '" + text + "'");
    }
    return value;
}

}  // namespace

std::string format_hash(std::uint64_t hash) {
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

std::string format_coefficient(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string support_key(const sparsereg::SparseModel& model) {
    std::vector<std::string> names;
    for (const auto& term : model.terms) {
        if (term.name != "1") names.push_back(term.name);
    }
    std::sort(names.begin(), names.end());
    std::string key;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) key += "; ";
        key += names[i];
    }
    return key;
}

void write_report(const ModelReport& report, std::ostream& out) {
    const auto& m = report.model;
    out << "# esparse model report\n";
    out << "seed " << report.seed << '\n';
    out << "generation " << report.generation << '\n';
    out << "lambda1 " << format_coefficient(m.lambda1) << '\n';
    out << "lambda2 " << format_coefficient(m.lambda2) << '\n';
    out << "percent_error " << format_coefficient(m.validation_error) << '\n';
    out << "training_mse " << format_coefficient(m.training_mse) << '\n';
    out << "data_hash " << format_hash(report.data_hash) << '\n';
    for (const auto& term : m.terms) {
        out << "term " << format_coefficient(term.coefficient) << ' ' << term.name << '\n';
    }
}

void write_report(const ModelReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_report(report, out);
}

ModelReport read_report(std::istream& in) {
    ModelReport report;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto space = line.find(' ');
        if (space == std::string::npos) {
            throw DataError("report line " + std::to_string(number) + ": expected 'key value'");
        }
        const std::string key = line.substr(0, space);
        const std::string rest = line.substr(space + 1);
        if (key == "term") {
            const auto split = rest.find(' ');
            if (split == std::string::npos) {
                throw DataError("report line " + std::to_string(number) + ": term needs an expression");
            }
            const double coefficient = read_double(rest.substr(0, split), number);
            expr::Tree tree = [&] {
                try {
                    return expr::parse(rest.substr(split + 1));
                } catch (const InvalidArgument& e) {
                    throw DataError("report line " + std::to_string(number) + ": " + e.what());
                }
            }();
            std::string name = expr::canonical_string(tree);
            report.model.terms.push_back({std::move(tree), std::move(name), coefficient});
        } else if (key == "seed") {
            report.seed = read_integer<std::uint64_t>(rest, number);
        } else if (key == "generation") {
            report.generation = read_integer<int>(rest, number);
        } else if (key == "lambda1") {
            report.model.lambda1 = read_double(rest, number);
        } else if (key == "lambda2") {
            report.model.lambda2 = read_double(rest, number);
        } else if (key == "percent_error") {
            report.model.validation_error = read_double(rest, number);
        } else if (key == "training_mse") {
            report.model.training_mse = read_double(rest, number);
        } else if (key == "data_hash") {
            report.data_hash = read_integer<std::uint64_t>(rest, number, 16);
        } else {
            throw DataError("report line " + std::to_string(number) + ": unknown key '" + key + "'");
        }
    }
    if (report.model.terms.empty()) throw DataError("report has no terms");
    return report;
}

ModelReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_report(in);
}

}  // namespace esparse::cli
