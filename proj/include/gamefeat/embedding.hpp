#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gamefeat/error.hpp"

namespace gamefeat {

/// Cosine similarity of two equally sized vectors, clamped to [-1, 1].
/// A zero vector on either side yields 0.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& u,
                                 const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()) + ")");
  }
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) return Scalar(0);
  const Scalar c = u.dot(v) / (nu * nv);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// Word -> dense vector table. Rows live contiguously in one row-major matrix.
/// Immutable after construction; concurrent reads are safe.
template <typename Scalar_>
class BasicEmbeddingTable {
 public:
  using Scalar = Scalar_;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using ConstRow = Eigen::Map<const Vector>;
  using Index = Eigen::Index;

  BasicEmbeddingTable() = default;

  /// `words[i]` owns `vectors.row(i)`. First occurrence of a repeated word wins.
  BasicEmbeddingTable(std::vector<std::string> words, Matrix vectors)
      : words_(std::move(words)), vectors_(std::move(vectors)) {
    if (static_cast<Index>(words_.size()) != vectors_.rows())
      throw std::invalid_argument("embedding table: word count does not match row count");
    if (!vectors_.allFinite()) throw FormatError("embedding table holds a non-finite component");
    index_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<Index>(i));
  }

  Index dimension() const { return vectors_.cols(); }
  std::size_t size() const { return index_.size(); }
  std::size_t rows() const { return words_.size(); }

  std::optional<Index> index_of(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Exact match; the caller lowercases.
  std::optional<ConstRow> lookup(std::string_view word) const {
    const auto i = index_of(word);
    if (!i) return std::nullopt;
    return row(*i);
  }

  ConstRow row(Index i) const { return ConstRow(vectors_.row(i).data(), vectors_.cols()); }
  const std::string& word(Index i) const { return words_[static_cast<std::size_t>(i)]; }
  const Matrix& matrix() const { return vectors_; }

 private:
  std::vector<std::string> words_;
  Matrix vectors_;
  std::unordered_map<std::string, Index> index_;
};

using EmbeddingTable = BasicEmbeddingTable<double>;

/// Reads GloVe text format (`word c1 ... cd`, space separated). Throws
/// FormatError naming the line on a wrong component count or a non-finite
/// value.
template <typename Scalar = double>
BasicEmbeddingTable<Scalar> load_embeddings(std::istream& in, Eigen::Index expected_dimension) {
  if (expected_dimension <= 0) throw std::invalid_argument("embedding dimension must be positive");
  std::vector<std::string> words;
  std::vector<Scalar> data;
  std::string line;
  std::size_t line_no = 0;
  const auto dim = static_cast<std::size_t>(expected_dimension);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    const auto sp = rest.find(' ');
    if (sp == std::string_view::npos || sp == 0)
      throw FormatError("embeddings line " + std::to_string(line_no) + ": no components", line_no);
    words.emplace_back(rest.substr(0, sp));
    rest.remove_prefix(sp + 1);

    std::size_t count = 0;
    while (!rest.empty()) {
      const auto next = rest.find(' ');
      const auto field = rest.substr(0, next);
      rest = next == std::string_view::npos ? std::string_view{} : rest.substr(next + 1);
      if (field.empty()) continue;
      double value = 0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw FormatError("embeddings line " + std::to_string(line_no) + ": bad number '" +
                              std::string(field) + "'",
                          line_no);
      }
      if (!std::isfinite(value))
        throw FormatError("embeddings line " + std::to_string(line_no) + ": non-finite component",
                          line_no);
      data.push_back(static_cast<Scalar>(value));
      ++count;
    }
    if (count != dim) {
      throw FormatError("embeddings line " + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " components, found " + std::to_string(count),
                        line_no);
    }
  }
  using Table = BasicEmbeddingTable<Scalar>;
  typename Table::Matrix m(static_cast<Eigen::Index>(words.size()), expected_dimension);
  if (!data.empty()) {
    m = Eigen::Map<const typename Table::Matrix>(data.data(), m.rows(), m.cols());
  }
  return Table(std::move(words), std::move(m));
}

template <typename Scalar = double>
BasicEmbeddingTable<Scalar> load_embeddings(const std::filesystem::path& path,
                                            Eigen::Index expected_dimension) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings: " + path.string());
  return load_embeddings<Scalar>(in, expected_dimension);
}

}  // namespace gamefeat
