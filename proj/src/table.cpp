#include "tabgr/table.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "tabgr/error.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

namespace {

std::string cell_to_string(const nlohmann::json& v) {
    if (v.is_null()) return {};
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

std::vector<std::string> string_list(const nlohmann::json& arr, const char* what) {
    if (!arr.is_array()) throw MalformedRecord(std::string(what) + " is not an array");
    std::vector<std::string> out;
    out.reserve(arr.size());
    for (const auto& v : arr) out.push_back(cell_to_string(v));
    return out;
}

std::size_t bounded_draw(std::mt19937_64& rng, std::size_t bound) {
    // Rejection sampling on the top of the range keeps the draw unbiased.
    const std::uint64_t b = bound;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % b);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % b);
}

std::vector<std::size_t> swap_shuffle(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> map(n);
    for (std::size_t i = 0; i < n; ++i) map[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
        std::swap(map[i], map[bounded_draw(rng, n)]);
    }
    return map;
}

bool is_bijection(const std::vector<std::size_t>& map) {
    std::vector<bool> seen(map.size(), false);
    for (auto v : map) {
        if (v >= map.size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

std::vector<std::size_t> invert(const std::vector<std::size_t>& map) {
    std::vector<std::size_t> inv(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) inv[map[i]] = i;
    return inv;
}

}  // namespace

Table::Table(std::string title, std::vector<std::string> headers, Grid rows,
             std::string source_id)
    : title_(std::move(title)),
      headers_(normalize_headers(std::move(headers))),
      rows_(std::move(rows)),
      source_id_(std::move(source_id)) {
    if (headers_.empty()) throw EmptyHeader();
    const auto width = headers_.size();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i].size() > width) {
            throw MalformedRecord("row " + std::to_string(i) + " has " +
                                  std::to_string(rows_[i].size()) + " cells but the header has " +
                                  std::to_string(width));
        }
        rows_[i].resize(width);
    }
}

const std::string& Table::cell(std::size_t row, std::size_t col) const {
    if (row >= rows_.size() || col >= headers_.size()) {
        throw IndexOutOfRange("cell (" + std::to_string(row) + ", " + std::to_string(col) +
                              ") outside " + std::to_string(rows_.size()) + "x" +
                              std::to_string(headers_.size()) + " table");
    }
    return rows_[row][col];
}

std::vector<std::string> normalize_headers(std::vector<std::string> headers) {
    for (std::size_t j = 0; j < headers.size(); ++j) {
        if (text::trim(headers[j]).empty()) headers[j] = "Column" + std::to_string(j + 1);
    }
    std::unordered_set<std::string> taken(headers.begin(), headers.end());
    std::unordered_map<std::string, std::size_t> seen;
    for (auto& h : headers) {
        auto& count = seen[h];
        ++count;
        if (count == 1) continue;
        std::size_t k = count;
        std::string candidate = h + "_" + std::to_string(k);
        while (taken.count(candidate)) candidate = h + "_" + std::to_string(++k);
        count = k;
        taken.insert(candidate);
        h = std::move(candidate);
    }
    return headers;
}

Table parse_table(const nlohmann::json& record) {
    if (!record.is_object()) throw MalformedRecord("table record is not an object");
    if (!record.contains("header")) throw MalformedRecord("table record lacks 'header'");
    if (!record.contains("rows")) throw MalformedRecord("table record lacks 'rows'");

    const auto& header = record.at("header");
    if (!header.is_array()) throw MalformedRecord("'header' is not an array");
    std::vector<std::string> headers;
    if (!header.empty() && header.front().is_array()) {
        std::vector<std::vector<std::string>> levels;
        for (const auto& level : header) levels.push_back(string_list(level, "header level"));
        headers = flatten_headers(levels);
    } else {
        headers = string_list(header, "'header'");
    }
    if (headers.empty()) throw EmptyHeader();

    const auto& rows = record.at("rows");
    if (!rows.is_array()) throw MalformedRecord("'rows' is not an array");
    Table::Grid grid;
    grid.reserve(rows.size());
    for (const auto& r : rows) grid.push_back(string_list(r, "row"));

    std::string id;
    if (record.contains("id")) id = cell_to_string(record.at("id"));
    std::string title;
    if (record.contains("title")) title = cell_to_string(record.at("title"));

    Table table(std::move(title), std::move(headers), std::move(grid), std::move(id));

    if (record.contains("fill_columns")) {
        std::set<std::size_t> cols;
        for (const auto& c : record.at("fill_columns")) {
            if (!c.is_number_unsigned() && !c.is_number_integer()) {
                throw MalformedRecord("'fill_columns' must hold column indices");
            }
            cols.insert(c.get<std::size_t>());
        }
        table = forward_fill(table, cols);
    }
    return table;
}

std::vector<std::string> flatten_headers(const std::vector<std::vector<std::string>>& levels) {
    if (levels.empty()) return {};
    const auto width = levels.front().size();
    for (const auto& level : levels) {
        if (level.size() != width) {
            throw WidthMismatch("header levels have widths " + std::to_string(width) + " and " +
                                std::to_string(level.size()));
        }
    }
    std::vector<std::string> out(width);
    for (std::size_t j = 0; j < width; ++j) {
        std::vector<std::string> parts;
        for (const auto& level : levels) {
            std::string part(text::trim(level[j]));
            if (part.empty()) continue;
            if (!parts.empty() && parts.back() == part) continue;
            parts.push_back(std::move(part));
        }
        out[j] = text::join(parts, "-");
    }
    return out;
}

Table forward_fill(const Table& table, const std::set<std::size_t>& cols) {
    if (cols.empty()) return table;
    for (auto c : cols) {
        if (c >= table.num_cols()) {
            throw IndexOutOfRange("forward_fill column " + std::to_string(c) + " out of range");
        }
    }
    Table::Grid grid = table.rows();
    for (auto c : cols) {
        const std::string* last = nullptr;
        for (auto& row : grid) {
            if (row[c].empty()) {
                if (last) row[c] = *last;
            } else {
                last = &row[c];
            }
        }
    }
    return Table(table.title(), table.headers(), std::move(grid), table.source_id());
}

Permutation Permutation::identity(std::size_t rows, std::size_t cols) {
    Permutation p;
    p.row_map.resize(rows);
    p.col_map.resize(cols);
    for (std::size_t i = 0; i < rows; ++i) p.row_map[i] = i;
    for (std::size_t j = 0; j < cols; ++j) p.col_map[j] = j;
    return p;
}

Permutation Permutation::inverse() const {
    return Permutation{invert(row_map), invert(col_map), seed};
}

bool Permutation::is_valid() const { return is_bijection(row_map) && is_bijection(col_map); }

Table permute(const Table& table, const Permutation& perm) {
    if (perm.row_map.size() != table.num_rows() || perm.col_map.size() != table.num_cols()) {
        throw DimensionMismatch("permutation is " + std::to_string(perm.row_map.size()) + "x" +
                                std::to_string(perm.col_map.size()) + " but table is " +
                                std::to_string(table.num_rows()) + "x" +
                                std::to_string(table.num_cols()));
    }
    if (!perm.is_valid()) throw DimensionMismatch("permutation maps are not bijections");

    std::vector<std::string> headers(table.num_cols());
    for (std::size_t j = 0; j < headers.size(); ++j) headers[j] = table.headers()[perm.col_map[j]];
    Table::Grid grid(table.num_rows(), std::vector<std::string>(table.num_cols()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& src = table.rows()[perm.row_map[i]];
        for (std::size_t j = 0; j < headers.size(); ++j) grid[i][j] = src[perm.col_map[j]];
    }
    return Table(table.title(), std::move(headers), std::move(grid), table.source_id());
}

Permutation random_swap_permutation(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Permutation p;
    p.seed = seed;
    p.row_map = swap_shuffle(rows, rng);
    p.col_map = swap_shuffle(cols, rng);
    return p;
}

nlohmann::json table_to_json(const Table& table) {
    return nlohmann::json{{"id", table.source_id()},
                          {"title", table.title()},
                          {"header", table.headers()},
                          {"rows", table.rows()}};
}

}  // namespace tabgr
