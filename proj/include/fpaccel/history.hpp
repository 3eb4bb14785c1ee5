#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace fpaccel {

// Fixed-capacity ring buffer of paired difference columns (dx_j, df_j).
// Pushing past capacity drops the oldest pair; restarts truncate via clear()
// without reallocating.
class HistoryBuffer {
 public:
  HistoryBuffer(Eigen::Index dim, int capacity)
      : dx_(dim, capacity), df_(dim, capacity) {
    if (dim < 1 || capacity < 1) throw std::invalid_argument("bad history shape");
  }

  void push(const Eigen::VectorXd& dx, const Eigen::VectorXd& df) {
    const int slot = (head_ + count_) % capacity();
    dx_.col(slot) = dx;
    df_.col(slot) = df;
    if (count_ < capacity()) {
      ++count_;
    } else {
      head_ = (head_ + 1) % capacity();
    }
  }

  void clear() {
    head_ = 0;
    count_ = 0;
  }

  int size() const { return count_; }
  int capacity() const { return static_cast<int>(dx_.cols()); }
  Eigen::Index dim() const { return dx_.rows(); }

  // Columns ordered oldest to newest.
  Eigen::MatrixXd dx_matrix() const { return gather(dx_); }
  Eigen::MatrixXd df_matrix() const { return gather(df_); }

 private:
  Eigen::MatrixXd gather(const Eigen::MatrixXd& src) const {
    Eigen::MatrixXd out(src.rows(), count_);
    for (int j = 0; j < count_; ++j) out.col(j) = src.col((head_ + j) % capacity());
    return out;
  }

  Eigen::MatrixXd dx_, df_;
  int head_ = 0;
  int count_ = 0;
};

}  // namespace fpaccel
