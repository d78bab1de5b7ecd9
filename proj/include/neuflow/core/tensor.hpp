#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "neuflow/core/shape.hpp"

namespace neuflow {

// Dynamic tape reverse-mode autodiff over dense row-major arrays.
// Each op allocates one Node holding the forward value and a closure that
// scatters the incoming gradient to its parents. backward() walks nodes in
// reverse creation order, which is a valid topological order because a node
// can only depend on earlier nodes.

inline std::atomic<uint64_t>& tape_counter() {
  static std::atomic<uint64_t> c{1};
  return c;
}

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

// Disables graph construction in scope; forwards become plain array math.
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
};

template <class T>
class Tensor {
 public:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // allocated lazily during backward
    bool requires_grad = false;
    bool leaf = false;
    uint64_t seq = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void ensure_grad() {
      if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
  };

  Tensor() = default;

  static Tensor zeros(Shape s, bool requires_grad = false) {
    return from_data(std::move(s), {}, requires_grad);
  }

  static Tensor full(Shape s, T v) {
    Tensor t = zeros(std::move(s));
    std::fill(t.n_->value.begin(), t.n_->value.end(), v);
    return t;
  }

  static Tensor from_data(Shape s, std::vector<T> v, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(s);
    if (v.empty())
      n->value.assign(static_cast<size_t>(numel(n->shape)), T(0));
    else {
      NF_CHECK(static_cast<int64_t>(v.size()) == numel(n->shape),
               "from_data: size mismatch for " + shape_str(n->shape));
      n->value = std::move(v);
    }
    n->requires_grad = requires_grad;
    n->leaf = true;
    n->seq = tape_counter()++;
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

  // Op factory: value already computed; bw scatters this node's grad into
  // parents. Graph edges are dropped when grads are off or unneeded.
  static Tensor make(Shape s, std::vector<T> value, std::vector<Tensor> parents,
                     std::function<void(Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(s);
    NF_CHECK(static_cast<int64_t>(value.size()) == numel(n->shape),
             "op result size mismatch for " + shape_str(n->shape));
    n->value = std::move(value);
    bool need = false;
    if (grad_mode())
      for (const auto& p : parents) need = need || (p.n_ && p.n_->requires_grad);
    n->requires_grad = need;
    if (need) {
      n->parents.reserve(parents.size());
      for (auto& p : parents) n->parents.push_back(p.n_);
      n->backward = std::move(bw);
    }
    n->seq = tape_counter()++;
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int64_t dim(size_t i) const { return n_->shape[i]; }
  int64_t size() const { return static_cast<int64_t>(n_->value.size()); }

  T* data() { return n_->value.data(); }
  const T* data() const { return n_->value.data(); }
  std::vector<T>& value() { return n_->value; }
  const std::vector<T>& value() const { return n_->value; }

  bool requires_grad() const { return n_->requires_grad; }
  void set_requires_grad(bool b) {
    NF_CHECK(n_->leaf, "requires_grad may only be toggled on leaf tensors");
    n_->requires_grad = b;
  }

  const std::vector<T>& grad() const { return n_->grad; }
  std::vector<T>& grad_mut() { return n_->grad; }
  void zero_grad() { n_->grad.assign(n_->value.size(), T(0)); }

  std::shared_ptr<Node> node() const { return n_; }

  // Same storage contents, cut from the tape.
  Tensor detach() const {
    auto n = std::make_shared<Node>();
    n->shape = n_->shape;
    n->value = n_->value;
    n->leaf = true;
    n->seq = tape_counter()++;
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

  T item() const {
    NF_CHECK(size() == 1, "item() on non-scalar tensor");
    return n_->value[0];
  }

  // Reverse pass from a scalar. Leaf grads accumulate; interior grads are
  // released as soon as their node has been processed.
  void backward() const {
    NF_CHECK(size() == 1, "backward() requires a scalar loss");
    NF_CHECK(n_->requires_grad, "backward() on a tensor with no graph");

    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{n_.get()};
    seen.insert(n_.get());
    while (!stack.empty()) {
      Node* cur = stack.back();
      stack.pop_back();
      order.push_back(cur);
      for (auto& p : cur->parents)
        if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
    std::sort(order.begin(), order.end(),
              [](Node* a, Node* b) { return a->seq > b->seq; });

    n_->ensure_grad();
    n_->grad[0] = T(1);
    for (Node* node : order) {
      if (node->backward && !node->grad.empty()) {
        for (auto& p : node->parents)
          if (p->requires_grad) p->ensure_grad();
        node->backward(*node);
      }
      if (!node->leaf) {
        std::vector<T>().swap(node->grad);
      }
    }
  }

 private:
  std::shared_ptr<Node> n_;
};

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.value())
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

// Forward-pass sanity guard used by the model pipeline; names the stage so a
// diverging run fails loudly instead of silently poisoning later stages.
template <class T>
void ensure_finite(const Tensor<T>& t, const char* stage) {
  if (!all_finite(t))
    throw std::runtime_error(std::string("non-finite values detected at stage: ") + stage);
}

}  // namespace neuflow
