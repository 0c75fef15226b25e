#pragma once

// Dense 2-D reverse-mode autodiff. Vectors are 1×n rows; affine maps are
// written x·W + b with W stored as in×out.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace kpgen {

class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(size_t rows, size_t cols, std::vector<double> data);

  static Matrix row(std::vector<double> values);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const;

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// std::mt19937_64 with the conversions done here rather than through the
// standard distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}
  uint64_t next() { return engine_(); }
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  size_t below(size_t n);                    // [0, n)

  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<size_t>(last - first);
    for (size_t i = n; i > 1; --i) std::swap(first[i - 1], first[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, size_t rows, size_t cols) : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
  void zero_grad() { grad.fill(0.0); }
};

// Owns named parameters in registration order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, size_t rows, size_t cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  size_t count() const { return params_.size(); }

  void init_uniform(Rng& rng, double range);
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  size_t rows() const { return value().rows(); }
  size_t cols() const { return value().cols(); }
  double scalar() const { return value()[0]; }
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Records operations in execution order; backward() walks them once in
// reverse. Single-threaded.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);  // leaf that receives a gradient
  // Leaf bound to a parameter; repeated calls in one tape return the same node.
  Var param(Parameter& p);

  Var record(const char* op, Matrix value, std::vector<int> inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1, propagates, and accumulates into bound parameters.
  void backward(Var loss);

  const Matrix& value(int id) const;
  const Matrix& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  Matrix& grad_mut(int id);
  bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  size_t size() const { return nodes_.size(); }
  // Drops every node recorded after the first `n`; handles to them become invalid.
  void truncate(size_t n);

  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }
  // When off, parameter leaves are recorded as constants (inference).
  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool training_ = false;
  bool grad_enabled_ = true;
};

// Operations. Shape mismatches throw ShapeError naming the op and shapes;
// non-finite results throw NumericError.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_bias(Var a, Var bias);         // bias 1×cols added to every row
Var scale(Var a, double k);
Var scale_by(Var a, Var s);            // s is 1×1
Var affine(Var a, double k, double c); // k·a + c
Var reciprocal(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var log(Var a, double clamp_min = 0.0);  // log(max(a, clamp_min)) with clamped positions not differentiated
Var softmax_rows(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var a, size_t begin, size_t count);
Var slice_cols(Var a, size_t begin, size_t count);
Var sum(Var a);
Var mean(Var a);
Var mean_rows(Var a);                  // 1×cols
Var embed(Var table, const std::vector<int>& ids);  // rows of table
Var pick(Var a, size_t r, size_t c);   // 1×1
Var scatter_cols(Var a, const std::vector<int>& columns, size_t width);  // a is 1×n; out[columns[i]] += a[i]
Var pad_cols(Var a, size_t width);
Var dropout(Var a, double rate, Rng* rng);  // identity unless the tape is training and rng is set

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one bias-corrected update from each parameter's grad. Throws
  // NumericError if any gradient is non-finite.
  void step(const std::vector<Parameter*>& params);

  long steps() const { return t_; }
  const Matrix& first_moment(const Parameter* p) const { return m_.at(p); }
  const Matrix& second_moment(const Parameter* p) const { return v_.at(p); }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::unordered_map<const Parameter*, Matrix> m_;
  std::unordered_map<const Parameter*, Matrix> v_;
};

double global_grad_norm(const std::vector<Parameter*>& params);

// Scales every grad by max_norm/norm when the global L2 norm exceeds max_norm.
// Returns the norm before clipping.
double clip_global_norm(const std::vector<Parameter*>& params, double max_norm = 1.0);

struct GruWeights {
  Parameter* w_z = nullptr;  // (in+hidden)×hidden
  Parameter* w_r = nullptr;
  Parameter* w_h = nullptr;
  Parameter* b_z = nullptr;  // 1×hidden
  Parameter* b_r = nullptr;
  Parameter* b_h = nullptr;

  static GruWeights create(ParameterStore& store, const std::string& prefix, size_t input, size_t hidden);
  size_t hidden() const { return b_z->value.cols(); }
  size_t input() const { return w_z->value.rows() - hidden(); }
};

// z = σ([x;h]W_z + b_z), r = σ([x;h]W_r + b_r),
// h̃ = tanh([x; r⊙h]W_h + b_h), h' = (1−z)⊙h + z⊙h̃
Var gru_cell(Var x, Var h_prev, const GruWeights& w);

// Runs a GRU over rows of `inputs` (L×in) starting from zeros; returns the
// per-step states in input order (reversed scan when `reverse`).
std::vector<Var> gru_scan(Var inputs, const GruWeights& w, bool reverse);

}  // namespace kpgen
