#include "kpgen/autodiff.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kpgen {

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw ShapeError("matrix data size " + std::to_string(data_.size()) + " does not match " + std::to_string(rows) +
                     "x" + std::to_string(cols));
}

Matrix Matrix::row(std::vector<double> values) {
  size_t n = values.size();
  return Matrix(1, n, std::move(values));
}

std::string Matrix::shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// Rng -----------------------------------------------------------------------

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

size_t Rng::below(size_t n) { return n == 0 ? 0 : static_cast<size_t>(next() % n); }

// ParameterStore --------------------------------------------------------------

Parameter& ParameterStore::add(const std::string& name, size_t rows, size_t cols) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(name, rows, cols));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *params_[it->second];
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterStore::init_uniform(Rng& rng, double range) {
  for (auto& p : params_)
    for (auto& v : p->value.values()) v = rng.uniform(-range, range);
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

// Tape ------------------------------------------------------------------------

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  return n.ref ? *n.ref : n.value;
}

Matrix& Tape::grad_mut(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() == 0) {
    const Matrix& v = n.ref ? *n.ref : n.value;
    n.grad = Matrix(v.rows(), v.cols());
  }
  return n.grad;
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.ref = &p.value;
  n.param = grad_enabled_ ? &p : nullptr;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return {this, id};
}

Var Tape::record(const char* op, Matrix value, std::vector<int> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [this](int i) { return needs_grad(i); });
  if (n.requires_grad) n.backward = std::move(backward);
  n.inputs = std::move(inputs);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::truncate(size_t n) {
  if (n >= nodes_.size()) return;
  nodes_.resize(n);
  for (auto it = param_nodes_.begin(); it != param_nodes_.end();) {
    if (static_cast<size_t>(it->second) >= n)
      it = param_nodes_.erase(it);
    else
      ++it;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: loss belongs to another tape");
  const Matrix& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be scalar, got " + lv.shape_str());
  grad_mut(loss.id)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      auto& pg = n.param->grad.values();
      const auto& g = n.grad.values();
      for (size_t k = 0; k < g.size(); ++k) pg[k] += g[k];
    }
  }
}

// Ops -------------------------------------------------------------------------

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

void check_same_tape(const char* op, Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

template <typename F, typename D>
Var unary(const char* op, Var a, F f, D dfdx_from_xy) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  int ia = a.id;
  return a.tape->record(op, std::move(y), {ia}, [ia, dfdx_from_xy](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(ia);
    const Matrix& y = t.value(self);
    Matrix& gx = t.grad_mut(ia);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx_from_xy(x[i], y[i]);
  });
}

}  // namespace

namespace {
// Four partial sums so the compiler can keep independent chains in flight.
double dot(const double* a, const double* b, size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}
}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape("matmul", a, b);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.cols() != B.rows()) shape_fail("matmul", A, B);
  const size_t n = A.rows(), k = A.cols(), m = B.cols();
  Matrix C(n, m);
  for (size_t i = 0; i < n; ++i) {
    double* c = C.data() + i * m;
    for (size_t p = 0; p < k; ++p) {
      const double av = A(i, p);
      if (av == 0.0) continue;
      const double* brow = B.data() + p * m;
      for (size_t j = 0; j < m; ++j) c[j] += av * brow[j];
    }
  }
  int ia = a.id, ib = b.id;
  return a.tape->record("matmul", std::move(C), {ia, ib}, [ia, ib, n, k, m](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& A = t.value(ia);
    const Matrix& B = t.value(ib);
    if (t.needs_grad(ia)) {
      Matrix& gA = t.grad_mut(ia);
      for (size_t i = 0; i < n; ++i) {
        const double* g = G.data() + i * m;
        for (size_t p = 0; p < k; ++p) {
          const double* brow = B.data() + p * m;
          gA(i, p) += dot(g, brow, m);
        }
      }
    }
    if (t.needs_grad(ib)) {
      Matrix& gB = t.grad_mut(ib);
      for (size_t i = 0; i < n; ++i) {
        const double* g = G.data() + i * m;
        for (size_t p = 0; p < k; ++p) {
          const double av = A(i, p);
          if (av == 0.0) continue;
          double* gb = gB.data() + p * m;
          for (size_t j = 0; j < m; ++j) gb[j] += av * g[j];
        }
      }
    }
  });
}

Var transpose(Var a) {
  const Matrix& A = a.value();
  Matrix T(A.cols(), A.rows());
  for (size_t i = 0; i < A.rows(); ++i)
    for (size_t j = 0; j < A.cols(); ++j) T(j, i) = A(i, j);
  int ia = a.id;
  return a.tape->record("transpose", std::move(T), {ia}, [ia](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& gA = t.grad_mut(ia);
    for (size_t i = 0; i < gA.rows(); ++i)
      for (size_t j = 0; j < gA.cols(); ++j) gA(i, j) += G(j, i);
  });
}

namespace {

Var binary_elementwise(const char* op, Var a, Var b, double sign_b) {
  check_same_tape(op, a, b);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (!A.same_shape(B)) shape_fail(op, A, B);
  Matrix C(A.rows(), A.cols());
  for (size_t i = 0; i < A.size(); ++i) C[i] = A[i] + sign_b * B[i];
  int ia = a.id, ib = b.id;
  return a.tape->record(op, std::move(C), {ia, ib}, [ia, ib, sign_b](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    if (t.needs_grad(ia)) {
      Matrix& g = t.grad_mut(ia);
      for (size_t i = 0; i < G.size(); ++i) g[i] += G[i];
    }
    if (t.needs_grad(ib)) {
      Matrix& g = t.grad_mut(ib);
      for (size_t i = 0; i < G.size(); ++i) g[i] += sign_b * G[i];
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return binary_elementwise("add", a, b, 1.0); }
Var sub(Var a, Var b) { return binary_elementwise("sub", a, b, -1.0); }

Var mul(Var a, Var b) {
  check_same_tape("mul", a, b);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (!A.same_shape(B)) shape_fail("mul", A, B);
  Matrix C(A.rows(), A.cols());
  for (size_t i = 0; i < A.size(); ++i) C[i] = A[i] * B[i];
  int ia = a.id, ib = b.id;
  return a.tape->record("mul", std::move(C), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& A = t.value(ia);
    const Matrix& B = t.value(ib);
    if (t.needs_grad(ia)) {
      Matrix& g = t.grad_mut(ia);
      for (size_t i = 0; i < G.size(); ++i) g[i] += G[i] * B[i];
    }
    if (t.needs_grad(ib)) {
      Matrix& g = t.grad_mut(ib);
      for (size_t i = 0; i < G.size(); ++i) g[i] += G[i] * A[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  check_same_tape("add_bias", a, bias);
  const Matrix& A = a.value();
  const Matrix& b = bias.value();
  if (b.rows() != 1 || b.cols() != A.cols()) shape_fail("add_bias", A, b);
  Matrix C = A;
  for (size_t i = 0; i < A.rows(); ++i)
    for (size_t j = 0; j < A.cols(); ++j) C(i, j) += b[j];
  int ia = a.id, ib = bias.id;
  return a.tape->record("add_bias", std::move(C), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    if (t.needs_grad(ia)) {
      Matrix& g = t.grad_mut(ia);
      for (size_t i = 0; i < G.size(); ++i) g[i] += G[i];
    }
    if (t.needs_grad(ib)) {
      Matrix& g = t.grad_mut(ib);
      for (size_t i = 0; i < G.rows(); ++i)
        for (size_t j = 0; j < G.cols(); ++j) g[j] += G(i, j);
    }
  });
}

Var scale(Var a, double k) {
  return unary("scale", a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Var affine(Var a, double k, double c) {
  return unary("affine", a, [k, c](double x) { return k * x + c; }, [k](double, double) { return k; });
}

Var scale_by(Var a, Var s) {
  check_same_tape("scale_by", a, s);
  const Matrix& A = a.value();
  const Matrix& S = s.value();
  if (S.size() != 1) shape_fail("scale_by", A, S);
  const double k = S[0];
  Matrix C(A.rows(), A.cols());
  for (size_t i = 0; i < A.size(); ++i) C[i] = A[i] * k;
  int ia = a.id, is = s.id;
  return a.tape->record("scale_by", std::move(C), {ia, is}, [ia, is](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& A = t.value(ia);
    const double k = t.value(is)[0];
    if (t.needs_grad(ia)) {
      Matrix& g = t.grad_mut(ia);
      for (size_t i = 0; i < G.size(); ++i) g[i] += G[i] * k;
    }
    if (t.needs_grad(is)) {
      double acc = 0.0;
      for (size_t i = 0; i < G.size(); ++i) acc += G[i] * A[i];
      t.grad_mut(is)[0] += acc;
    }
  });
}

Var reciprocal(Var a) {
  return unary("reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var log(Var a, double clamp_min) {
  return unary(
      "log", a, [clamp_min](double x) { return std::log(std::max(x, clamp_min)); },
      [clamp_min](double x, double) { return x > clamp_min ? 1.0 / x : 0.0; });
}

Var softmax_rows(Var a) {
  const Matrix& A = a.value();
  Matrix Y(A.rows(), A.cols());
  for (size_t i = 0; i < A.rows(); ++i) {
    double mx = -INFINITY;
    for (size_t j = 0; j < A.cols(); ++j) mx = std::max(mx, A(i, j));
    double z = 0.0;
    for (size_t j = 0; j < A.cols(); ++j) z += (Y(i, j) = std::exp(A(i, j) - mx));
    for (size_t j = 0; j < A.cols(); ++j) Y(i, j) /= z;
  }
  int ia = a.id;
  return a.tape->record("softmax_rows", std::move(Y), {ia}, [ia](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& Y = t.value(self);
    Matrix& gA = t.grad_mut(ia);
    for (size_t i = 0; i < Y.rows(); ++i) {
      double dot = 0.0;
      for (size_t j = 0; j < Y.cols(); ++j) dot += G(i, j) * Y(i, j);
      for (size_t j = 0; j < Y.cols(); ++j) gA(i, j) += Y(i, j) * (G(i, j) - dot);
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const size_t rows = parts[0].rows();
  size_t cols = 0;
  for (const auto& p : parts) {
    check_same_tape("concat_cols", parts[0], p);
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix C(rows, cols);
  std::vector<int> ids;
  size_t off = 0;
  for (const auto& p : parts) {
    const Matrix& P = p.value();
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < P.cols(); ++j) C(i, off + j) = P(i, j);
    off += P.cols();
    ids.push_back(p.id);
  }
  return parts[0].tape->record("concat_cols", std::move(C), ids, [ids](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    size_t off = 0;
    for (int id : ids) {
      const size_t w = t.value(id).cols();
      if (t.needs_grad(id)) {
        Matrix& g = t.grad_mut(id);
        for (size_t i = 0; i < G.rows(); ++i)
          for (size_t j = 0; j < w; ++j) g(i, j) += G(i, off + j);
      }
      off += w;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const size_t cols = parts[0].cols();
  size_t rows = 0;
  for (const auto& p : parts) {
    check_same_tape("concat_rows", parts[0], p);
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<int> ids;
  for (const auto& p : parts) {
    const auto& v = p.value().values();
    data.insert(data.end(), v.begin(), v.end());
    ids.push_back(p.id);
  }
  return parts[0].tape->record("concat_rows", Matrix(rows, cols, std::move(data)), ids, [ids](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    size_t off = 0;
    for (int id : ids) {
      const size_t n = t.value(id).size();
      if (t.needs_grad(id)) {
        Matrix& g = t.grad_mut(id);
        for (size_t k = 0; k < n; ++k) g[k] += G[off + k];
      }
      off += n;
    }
  });
}

Var slice_rows(Var a, size_t begin, size_t count) {
  const Matrix& A = a.value();
  if (begin + count > A.rows() || count == 0)
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + A.shape_str());
  const size_t cols = A.cols();
  std::vector<double> data(A.data() + begin * cols, A.data() + (begin + count) * cols);
  int ia = a.id;
  return a.tape->record("slice_rows", Matrix(count, cols, std::move(data)), {ia}, [ia, begin](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& g = t.grad_mut(ia);
    const size_t off = begin * G.cols();
    for (size_t k = 0; k < G.size(); ++k) g[off + k] += G[k];
  });
}

Var slice_cols(Var a, size_t begin, size_t count) {
  const Matrix& A = a.value();
  if (begin + count > A.cols() || count == 0)
    throw ShapeError("slice_cols: cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + A.shape_str());
  Matrix C(A.rows(), count);
  for (size_t i = 0; i < A.rows(); ++i)
    for (size_t j = 0; j < count; ++j) C(i, j) = A(i, begin + j);
  int ia = a.id;
  return a.tape->record("slice_cols", std::move(C), {ia}, [ia, begin](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& g = t.grad_mut(ia);
    for (size_t i = 0; i < G.rows(); ++i)
      for (size_t j = 0; j < G.cols(); ++j) g(i, begin + j) += G(i, j);
  });
}

Var sum(Var a) {
  const Matrix& A = a.value();
  double s = 0.0;
  for (double v : A.values()) s += v;
  int ia = a.id;
  return a.tape->record("sum", Matrix(1, 1, s), {ia}, [ia](Tape& t, int self) {
    const double g = t.grad(self)[0];
    Matrix& gA = t.grad_mut(ia);
    for (auto& v : gA.values()) v += g;
  });
}

Var mean(Var a) {
  const size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var mean_rows(Var a) {
  const Matrix& A = a.value();
  if (A.rows() == 0) throw ShapeError("mean_rows: empty input");
  Matrix M(1, A.cols());
  for (size_t i = 0; i < A.rows(); ++i)
    for (size_t j = 0; j < A.cols(); ++j) M[j] += A(i, j);
  const double inv = 1.0 / static_cast<double>(A.rows());
  for (auto& v : M.values()) v *= inv;
  int ia = a.id;
  return a.tape->record("mean_rows", std::move(M), {ia}, [ia, inv](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& g = t.grad_mut(ia);
    for (size_t i = 0; i < g.rows(); ++i)
      for (size_t j = 0; j < g.cols(); ++j) g(i, j) += G[j] * inv;
  });
}

Var embed(Var table, const std::vector<int>& ids) {
  const Matrix& T = table.value();
  if (ids.empty()) throw ShapeError("embed: empty id list");
  const size_t cols = T.cols();
  Matrix E(ids.size(), cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= T.rows())
      throw ShapeError("embed: id " + std::to_string(ids[i]) + " out of range for table " + T.shape_str());
    std::copy_n(T.data() + static_cast<size_t>(ids[i]) * cols, cols, E.data() + i * cols);
  }
  int it = table.id;
  return table.tape->record("embed", std::move(E), {it}, [it, ids, cols](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& g = t.grad_mut(it);
    for (size_t i = 0; i < ids.size(); ++i) {
      double* dst = g.data() + static_cast<size_t>(ids[i]) * cols;
      const double* src = G.data() + i * cols;
      for (size_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
  });
}

Var pick(Var a, size_t r, size_t c) {
  const Matrix& A = a.value();
  if (r >= A.rows() || c >= A.cols())
    throw ShapeError("pick: (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range for " + A.shape_str());
  int ia = a.id;
  return a.tape->record("pick", Matrix(1, 1, A(r, c)), {ia}, [ia, r, c](Tape& t, int self) {
    t.grad_mut(ia)(r, c) += t.grad(self)[0];
  });
}

Var scatter_cols(Var a, const std::vector<int>& columns, size_t width) {
  const Matrix& A = a.value();
  if (A.rows() != 1 || A.cols() != columns.size())
    throw ShapeError("scatter_cols: input " + A.shape_str() + " does not match " + std::to_string(columns.size()) +
                     " target columns");
  Matrix out(1, width);
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] < 0 || static_cast<size_t>(columns[i]) >= width)
      throw ShapeError("scatter_cols: column " + std::to_string(columns[i]) + " out of range " + std::to_string(width));
    out[static_cast<size_t>(columns[i])] += A[i];
  }
  int ia = a.id;
  return a.tape->record("scatter_cols", std::move(out), {ia}, [ia, columns](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& g = t.grad_mut(ia);
    for (size_t i = 0; i < columns.size(); ++i) g[i] += G[static_cast<size_t>(columns[i])];
  });
}

Var pad_cols(Var a, size_t width) {
  const Matrix& A = a.value();
  if (width < A.cols()) throw ShapeError("pad_cols: width " + std::to_string(width) + " below " + A.shape_str());
  Matrix out(A.rows(), width);
  for (size_t i = 0; i < A.rows(); ++i)
    for (size_t j = 0; j < A.cols(); ++j) out(i, j) = A(i, j);
  int ia = a.id;
  return a.tape->record("pad_cols", std::move(out), {ia}, [ia](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& g = t.grad_mut(ia);
    for (size_t i = 0; i < g.rows(); ++i)
      for (size_t j = 0; j < g.cols(); ++j) g(i, j) += G(i, j);
  });
}

Var dropout(Var a, double rate, Rng* rng) {
  if (!a.tape->training() || rng == nullptr || rate <= 0.0) return a;
  const Matrix& A = a.value();
  const double keep = 1.0 - rate;
  Matrix mask(A.rows(), A.cols());
  for (auto& m : mask.values()) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
  Var m = a.tape->constant(std::move(mask));
  return mul(a, m);
}

// Optimization ----------------------------------------------------------------

void Adam::step(const std::vector<Parameter*>& params) {
  for (const auto* p : params)
    if (!p->grad.all_finite()) throw NumericError("adam: non-finite gradient for " + p->name);
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (auto* p : params) {
    auto [mit, m_new] = m_.try_emplace(p, p->value.rows(), p->value.cols());
    auto [vit, v_new] = v_.try_emplace(p, p->value.rows(), p->value.cols());
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p->value[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

double global_grad_norm(const std::vector<Parameter*>& params) {
  double sq = 0.0;
  for (const auto* p : params)
    for (double g : p->grad.values()) sq += g * g;
  return std::sqrt(sq);
}

double clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto* p : params)
      for (auto& g : p->grad.values()) g *= k;
  }
  return norm;
}

// GRU -------------------------------------------------------------------------

GruWeights GruWeights::create(ParameterStore& store, const std::string& prefix, size_t input, size_t hidden) {
  GruWeights w;
  w.w_z = &store.add(prefix + ".W_z", input + hidden, hidden);
  w.w_r = &store.add(prefix + ".W_r", input + hidden, hidden);
  w.w_h = &store.add(prefix + ".W_h", input + hidden, hidden);
  w.b_z = &store.add(prefix + ".b_z", 1, hidden);
  w.b_r = &store.add(prefix + ".b_r", 1, hidden);
  w.b_h = &store.add(prefix + ".b_h", 1, hidden);
  return w;
}

Var gru_cell(Var x, Var h_prev, const GruWeights& w) {
  Tape& t = *x.tape;
  const size_t hidden = w.hidden();
  if (x.rows() != 1 || x.cols() != w.input() || h_prev.rows() != 1 || h_prev.cols() != hidden) {
    std::ostringstream msg;
    msg << "gru_cell: input " << x.value().shape_str() << " and state " << h_prev.value().shape_str()
        << " do not match weights expecting 1x" << w.input() << " and 1x" << hidden;
    throw ShapeError(msg.str());
  }
  Var xh = concat_cols({x, h_prev});
  Var z = sigmoid(add_bias(matmul(xh, t.param(*w.w_z)), t.param(*w.b_z)));
  Var r = sigmoid(add_bias(matmul(xh, t.param(*w.w_r)), t.param(*w.b_r)));
  Var xrh = concat_cols({x, mul(r, h_prev)});
  Var cand = tanh(add_bias(matmul(xrh, t.param(*w.w_h)), t.param(*w.b_h)));
  // (1 − z)⊙h + z⊙h̃ = h + z⊙(h̃ − h)
  return add(h_prev, mul(z, sub(cand, h_prev)));
}

std::vector<Var> gru_scan(Var inputs, const GruWeights& w, bool reverse) {
  Tape& t = *inputs.tape;
  const size_t n = inputs.rows();
  const size_t in = w.input(), hidden = w.hidden();
  if (inputs.cols() != in) {
    std::ostringstream msg;
    msg << "gru_scan: inputs " << inputs.value().shape_str() << " do not match weights expecting width " << in;
    throw ShapeError(msg.str());
  }
  std::vector<Var> states(n);
  if (n == 0) return states;
  // Input halves of all three projections for every step at once.
  Var wz = t.param(*w.w_z), wr = t.param(*w.w_r), wh = t.param(*w.w_h);
  Var w_x = concat_cols({slice_rows(wz, 0, in), slice_rows(wr, 0, in), slice_rows(wh, 0, in)});
  Var b_x = concat_cols({t.param(*w.b_z), t.param(*w.b_r), t.param(*w.b_h)});
  Var proj = add_bias(matmul(inputs, w_x), b_x);
  Var w_zr = concat_cols({slice_rows(wz, in, hidden), slice_rows(wr, in, hidden)});
  Var w_hh = slice_rows(wh, in, hidden);

  Var h = t.constant(Matrix(1, hidden));
  for (size_t step = 0; step < n; ++step) {
    const size_t i = reverse ? n - 1 - step : step;
    Var px = slice_rows(proj, i, 1);
    Var zr = sigmoid(add(slice_cols(px, 0, 2 * hidden), matmul(h, w_zr)));
    Var z = slice_cols(zr, 0, hidden);
    Var r = slice_cols(zr, hidden, hidden);
    Var cand = tanh(add(slice_cols(px, 2 * hidden, hidden), matmul(mul(r, h), w_hh)));
    h = add(h, mul(z, sub(cand, h)));
    states[i] = h;
  }
  return states;
}

}  // namespace kpgen
