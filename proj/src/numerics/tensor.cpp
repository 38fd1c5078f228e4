#include "dualtune/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace dualtune::num {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw ContractError("operation on an undefined tensor");
  return *node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = numel(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_string(shape) + " needs " +
                         std::to_string(numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const { return checked(node_).value.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("expected 2-D tensor, got " + shape_string(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("expected 2-D tensor, got " + shape_string(shape()));
  return shape()[1];
}

std::span<const double> Tensor::values() const { return checked(node_).value; }
std::span<double> Tensor::mutable_values() { return checked(node_).value; }

double Tensor::item() const {
  const auto& n = checked(node_);
  if (n.value.size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(n.shape));
  }
  return n.value[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  if (i >= rows() || j >= cols()) {
    throw IndexError("index (" + std::to_string(i) + ", " + std::to_string(j) +
                     ") out of range for shape " + shape_string(shape()));
  }
  return checked(node_).value[i * cols() + j];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  auto& n = checked(node_);
  if (!n.leaf) throw ContractError("requires_grad can only be set on leaf tensors");
  n.requires_grad = flag;
}

bool Tensor::is_leaf() const { return checked(node_).leaf; }
const char* Tensor::op_name() const { return checked(node_).op; }

bool Tensor::has_grad() const {
  const auto& n = checked(node_);
  return n.grad.size() == n.value.size();
}

std::span<const double> Tensor::grad() const {
  auto& n = checked(node_);
  n.ensure_grad();
  return n.grad;
}

std::span<double> Tensor::mutable_grad() {
  auto& n = checked(node_);
  n.ensure_grad();
  return n.grad;
}

void Tensor::zero_grad() {
  auto& n = checked(node_);
  n.grad.assign(n.value.size(), 0.0);
}

Tensor Tensor::detach() const {
  const auto& n = checked(node_);
  return from(n.shape, n.value, false);
}

Tensor Tensor::clone() const {
  const auto& n = checked(node_);
  return from(n.shape, n.value, n.requires_grad);
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents, detail::BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  node->op = op;
  bool needs = g_grad_enabled && std::any_of(parents.begin(), parents.end(),
                           [](const Tensor& p) { return p.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward on an undefined tensor");
  if (loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(loss.shape()));
  }
  detail::Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (node->leaf) {
      node->ensure_grad();
    } else {
      node->grad.assign(node->value.size(), 0.0);
    }
  }
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (!node->leaf && node->backward) node->backward(*node);
  }
  // Interior gradients are scratch space; release them.
  for (auto* node : order) {
    if (!node->leaf) std::vector<double>().swap(node->grad);
  }
}

void zero_grads(std::span<const Tensor> tensors) {
  for (auto t : tensors) t.zero_grad();
}

}  // namespace dualtune::num
