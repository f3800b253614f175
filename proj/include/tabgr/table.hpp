#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tabgr {

struct CellRef {
    std::size_t row = 0;
    std::size_t col = 0;

    friend bool operator==(const CellRef&, const CellRef&) = default;
    friend auto operator<=>(const CellRef&, const CellRef&) = default;
};

/// A rectangular relational table. Immutable once constructed; the
/// constructor enforces rectangularity and unique, non-empty headers.
class Table {
public:
    using Grid = std::vector<std::vector<std::string>>;

    Table() = default;

    /// Ragged rows are padded with empty cells; rows longer than the header
    /// are rejected. Headers are disambiguated with `normalize_headers`.
    Table(std::string title, std::vector<std::string> headers, Grid rows,
          std::string source_id = {});

    const std::string& title() const noexcept { return title_; }
    const std::string& source_id() const noexcept { return source_id_; }
    const std::vector<std::string>& headers() const noexcept { return headers_; }
    const Grid& rows() const noexcept { return rows_; }

    std::size_t num_rows() const noexcept { return rows_.size(); }
    std::size_t num_cols() const noexcept { return headers_.size(); }

    const std::string& cell(std::size_t row, std::size_t col) const;
    const std::string& cell(CellRef ref) const { return cell(ref.row, ref.col); }

    friend bool operator==(const Table&, const Table&) = default;

private:
    std::string title_;
    std::vector<std::string> headers_;
    Grid rows_;
    std::string source_id_;
};

/// Empty headers become "Column{j+1}"; the k-th repeat (k >= 2) of a header
/// becomes "{header}_{k}", bumping k further if that name is already taken.
std::vector<std::string> normalize_headers(std::vector<std::string> headers);

/// Parses one table record: {id, title?, header, rows}. `header` may be a
/// list of strings or a list of header levels (hierarchical). Non-string
/// cells are stringified; null becomes "". An optional `fill_columns` index
/// list is forward-filled after parsing.
Table parse_table(const nlohmann::json& record);

/// Merges hierarchical header levels top-down into "-" joined paths.
/// Empty components are skipped, as is a component equal to the one directly
/// above it (a vertically merged header cell).
std::vector<std::string> flatten_headers(const std::vector<std::vector<std::string>>& levels);

/// Within each listed column, empty cells inherit the nearest non-empty cell
/// above them. Out-of-range indices raise IndexOutOfRange.
Table forward_fill(const Table& table, const std::set<std::size_t>& cols);

struct Permutation {
    std::vector<std::size_t> row_map;
    std::vector<std::size_t> col_map;
    std::uint64_t seed = 0;

    static Permutation identity(std::size_t rows, std::size_t cols);
    Permutation inverse() const;
    bool is_valid() const;

    friend bool operator==(const Permutation&, const Permutation&) = default;
};

/// Output row i' is input row row_map[i'], output column j' is input column
/// col_map[j']. Headers follow their columns.
Table permute(const Table& table, const Permutation& perm);

/// For each index in order, swap it with a uniformly drawn index of the full
/// range. Rows are drawn first, then columns, from one mt19937_64 stream.
/// The bounded draw is rejection-sampled so results do not depend on the
/// standard library's distribution implementation.
Permutation random_swap_permutation(std::size_t rows, std::size_t cols, std::uint64_t seed);

nlohmann::json table_to_json(const Table& table);

}  // namespace tabgr
