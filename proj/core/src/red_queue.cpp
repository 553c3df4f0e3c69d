#include "multcp/red_queue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace multcp {

void RedParams::validate() const {
  if (!(thresh > 0.0 && thresh < maxthresh && maxthresh <= static_cast<double>(limit)))
    throw std::invalid_argument("RED thresholds must satisfy 0 < thresh < maxthresh <= limit");
  if (!(ewma_weight > 0.0 && ewma_weight <= 1.0)) throw std::invalid_argument("RED ewma_weight must lie in (0, 1]");
  if (!(max_drop_prob > 0.0 && max_drop_prob <= 1.0))
    throw std::invalid_argument("RED max_drop_prob must lie in (0, 1]");
}

double red_drop_probability(const RedParams& params, double avg, int count) {
  if (avg < params.thresh) return 0.0;
  if (avg >= params.maxthresh) return 1.0;
  const double pb = params.max_drop_prob * (avg - params.thresh) / (params.maxthresh - params.thresh);
  const double spread = 1.0 - static_cast<double>(count) * pb;
  if (spread <= 0.0) return 1.0;
  return std::min(1.0, pb / spread);
}

RedQueue::RedQueue(RedParams params, SimTime typical_transmission, Rng& rng)
    : params_(params), typical_transmission_(typical_transmission), rng_(rng) {
  params_.validate();
  if (typical_transmission_ <= SimTime{}) throw std::invalid_argument("typical transmission time must be positive");
}

void RedQueue::update_average(SimTime now) {
  const double w = params_.ewma_weight;
  if (state_.queue.empty() && state_.idle_start) {
    const double m = static_cast<double>((now - *state_.idle_start).ns()) /
                     static_cast<double>(typical_transmission_.ns());
    state_.avg *= std::pow(1.0 - w, m);
  } else {
    state_.avg = (1.0 - w) * state_.avg + w * static_cast<double>(state_.queue.size());
  }
}

EnqueueResult RedQueue::enqueue(Packet packet, SimTime now) {
  update_average(now);

  if (state_.queue.size() >= params_.limit) {
    state_.count = 0;
    ++forced_drops_;
    return EnqueueResult::dropped;
  }
  if (state_.avg >= params_.maxthresh) {
    state_.count = 0;
    ++forced_drops_;
    return EnqueueResult::dropped;
  }
  if (state_.avg >= params_.thresh) {
    ++state_.count;
    const double pa = red_drop_probability(params_, state_.avg, state_.count);
    if (rng_.uniform() < pa) {
      state_.count = 0;
      ++early_drops_;
      return EnqueueResult::dropped;
    }
  } else {
    state_.count = -1;
  }

  state_.queue.push_back(std::move(packet));
  state_.idle_start.reset();
  return EnqueueResult::admitted;
}

std::optional<Packet> RedQueue::dequeue(SimTime now) {
  if (state_.queue.empty()) return std::nullopt;
  Packet p = std::move(state_.queue.front());
  state_.queue.pop_front();
  if (state_.queue.empty()) state_.idle_start = now;
  return p;
}

}  // namespace multcp
