#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace esparse {

// Time-aligned measured columns. Rows [0, split) are the validation head,
// rows [split, n) the identification tail.
struct SignalSet {
    std::vector<double> t;
    std::vector<double> q;
    std::vector<double> qdot;
    std::vector<double> qddot;
    std::vector<double> zddot;
    std::size_t split = 0;

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
    [[nodiscard]] double dt() const;

    // Throws InvalidArgument when lengths differ, n < 2, t is not uniformly
    // increasing, or split is outside (0, n).
    void validate() const;

    [[nodiscard]] std::size_t validation_size() const noexcept { return split; }
    [[nodiscard]] std::size_t identification_size() const noexcept { return size() - split; }

    friend bool operator==(const SignalSet&, const SignalSet&) = default;
};

// Head / tail views of a column.
[[nodiscard]] inline std::span<const double> validation_part(const std::vector<double>& column,
                                                             std::size_t split) {
    return std::span<const double>(column).first(split);
}
[[nodiscard]] inline std::span<const double> identification_part(const std::vector<double>& column,
                                                                 std::size_t split) {
    return std::span<const double>(column).subspan(split);
}

inline constexpr const char* kSignalCsvHeader = "t,q,qdot,qddot,zddot";

// CSV with header `t,q,qdot,qddot,zddot`, 17 significant digits per value.
void write_signals_csv(const SignalSet& signals, std::ostream& out);
void write_signals_csv(const SignalSet& signals, const std::filesystem::path& path);

// The split index is not part of the file; callers pass it in. Throws
// DataError on schema mismatch (naming the missing column) or bad numbers.
[[nodiscard]] SignalSet read_signals_csv(std::istream& in, std::size_t split);
[[nodiscard]] SignalSet read_signals_csv(const std::filesystem::path& path, std::size_t split);

// FNV-1a over the raw bytes of every column and the split index.
[[nodiscard]] std::uint64_t content_hash(const SignalSet& signals);

}  // namespace esparse
