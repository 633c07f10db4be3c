#pragma once

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>
#include <tuple>
#include <vector>

#include "robohead/learn/metrics.hpp"
#include "robohead/learn/mlp.hpp"

namespace robohead::learn {

struct HyperGrid {
  std::vector<int> depths{1, 2};
  std::vector<int> widths{16, 32, 64};
  std::vector<Activation> activations{Activation::tanh, Activation::relu};
  std::vector<double> learning_rates{1e-2, 1e-3};
  std::vector<double> l2s{0.0, 1e-3};
  int epochs = 2000;
  std::uint64_t seed = 0;

  std::size_t size() const {
    return depths.size() * widths.size() * activations.size() * learning_rates.size() * l2s.size();
  }

  /// Grid points in lexicographic order (depth, width, activation, lr, l2).
  std::vector<MlpHyper> points() const {
    if (depths.empty() || widths.empty() || activations.empty() || learning_rates.empty() || l2s.empty())
      throw InvalidArgument("hyperparameter grid has an empty axis");
    std::vector<MlpHyper> out;
    for (int depth : depths)
      for (int width : widths)
        for (auto act : activations)
          for (double lr : learning_rates)
            for (double l2 : l2s) {
              if (depth < 0) throw InvalidArgument("grid depth must be >= 0");
              out.push_back({std::vector<int>(std::size_t(depth), width), act, lr, l2, epochs, seed});
            }
    return out;
  }
};

struct LeaderboardEntry {
  MlpHyper hyper;
  std::size_t grid_index = 0;
  double validation_rmse = 0.0;  // mean over outputs
  Eigen::Index parameters = 0;
  std::optional<std::string> failure;
};

struct GridSearchResult {
  MlpModel best;
  std::vector<LeaderboardEntry> leaderboard;  // ranked; failures last
};

/// Trains one network per grid point and ranks them by validation RMSE, then
/// by parameter count, then by grid order. `jobs` > 1 trains concurrently;
/// the ranking does not depend on it.
inline GridSearchResult grid_search(const Eigen::Ref<const Eigen::MatrixXd>& x_train,
                                    const Eigen::Ref<const Eigen::MatrixXd>& y_train,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x_val,
                                    const Eigen::Ref<const Eigen::MatrixXd>& y_val, const HyperGrid& grid,
                                    unsigned jobs = 1, double output_scale = 255.0) {
  const auto points = grid.points();
  std::vector<std::optional<MlpModel>> models(points.size());
  std::vector<LeaderboardEntry> board(points.size());
  const Eigen::MatrixXd xt = x_train, yt = y_train, xv = x_val, yv = y_val;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      auto& e = board[i];
      e.hyper = points[i];
      e.grid_index = i;
      try {
        MlpModel m = mlp_fit(xt, yt, points[i], output_scale);
        e.validation_rmse = mean_rmse(m.predict(xv), yv);
        e.parameters = m.parameter_count();
        if (!std::isfinite(e.validation_rmse)) throw TrainingDiverged("non-finite validation error with " + points[i].describe());
        models[i] = std::move(m);
      } catch (const std::exception& ex) {
        e.failure = ex.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(points.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::stable_sort(board.begin(), board.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    return std::make_tuple(a.failure.has_value(), a.validation_rmse, a.parameters, a.grid_index) <
           std::make_tuple(b.failure.has_value(), b.validation_rmse, b.parameters, b.grid_index);
  });
  if (board.front().failure) {
    std::string causes;
    for (const auto& e : board) causes += "\n  " + e.hyper.describe() + ": " + *e.failure;
    throw TrainingDiverged("every grid candidate failed:" + causes);
  }
  return {std::move(*models[board.front().grid_index]), std::move(board)};
}

}  // namespace robohead::learn
