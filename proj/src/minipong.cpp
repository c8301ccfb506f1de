#include <set>
#include <stdexcept>

#include "advrl/env.hpp"
#include "advrl/rng.hpp"

namespace advrl {

namespace {

constexpr int kGrid = 21;
constexpr int kAgentCol = 19;
constexpr int kOppCol = 1;
constexpr int kAgentHalf = 2;     // 5-cell agent paddle
constexpr int kOppHalf = 1;       // 3-cell opponent paddle
constexpr int kAgentSpeed = 2;
constexpr int kBallSubsteps = 3;  // horizontal cells per env step
constexpr int kOppReactCol = 6;   // opponent tracks only once the ball is this close
constexpr int kServeDelay = 3;  // steps the ball is held after a point
constexpr int kWinScore = 21;
constexpr int kDefaultMaxSteps = 500;

// Intensity levels shared by both pixel envs.
constexpr double kOppShade = 0.33;
constexpr double kAgentShade = 0.66;
constexpr double kBallShade = 1.0;
constexpr double kTrailShade = 0.33;  // previous ball cell: makes velocity visible

int clamp_paddle(int r, int half) {
  if (r < half) return half;
  if (r > kGrid - 1 - half) return kGrid - 1 - half;
  return r;
}

bool covers(int paddle_r, int ball_r, int half) { return std::abs(paddle_r - ball_r) <= half; }

int sign(int v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

}  // namespace

MiniPong::MiniPong(int max_steps) {
  spec_.name = "minipong";
  spec_.action_count = 3;  // stay / up / down
  spec_.frame_shape = {kGrid, kGrid, 1};
  spec_.reward_upper = static_cast<double>(kWinScore);
  spec_.reward_lower = -static_cast<double>(kWinScore);
  spec_.max_steps = max_steps > 0 ? max_steps : kDefaultMaxSteps;
}

std::unique_ptr<Env> MiniPong::clone_fresh() const {
  return std::make_unique<MiniPong>(spec_.max_steps);
}

void MiniPong::serve(int toward, int vertical) {
  ball_r_ = kGrid / 2;
  ball_c_ = kGrid / 2 + toward;
  prev_ball_r_ = ball_r_;
  prev_ball_c_ = ball_c_;
  dc_ = toward;
  dr_ = vertical;
  serve_delay_ = kServeDelay;
}

StepResult MiniPong::reset(std::uint64_t seed) {
  agent_r_ = kGrid / 2;
  opp_r_ = kGrid / 2;
  agent_score_ = 0;
  opp_score_ = 0;
  steps_ = 0;
  done_ = false;
  // The only seeded branch: which side the opening serve travels toward.
  serve((splitmix64(seed) & 1u) ? +1 : -1, +1);
  return {render_frame(), 0.0, false};
}

double MiniPong::advance_ball() {
  if (serve_delay_ > 0) {
    --serve_delay_;  // ball held at center so both paddles can re-position
    return 0.0;
  }
  prev_ball_r_ = ball_r_;
  prev_ball_c_ = ball_c_;
  // Vertical motion once per step, reflecting off the top/bottom walls.
  int nr = ball_r_ + dr_;
  if (nr < 0 || nr > kGrid - 1) {
    dr_ = -dr_;
    nr = ball_r_ + dr_;
  }
  ball_r_ = nr;

  for (int sub = 0; sub < kBallSubsteps; ++sub) {
    const int nc = ball_c_ + dc_;
    if (nc == kAgentCol && dc_ > 0 && covers(agent_r_, ball_r_, kAgentHalf)) {
      dc_ = -dc_;
      if (ball_r_ != agent_r_) dr_ = sign(ball_r_ - agent_r_);  // edge hits aim the ball
      continue;
    }
    if (nc == kOppCol && dc_ < 0 && covers(opp_r_, ball_r_, kOppHalf)) {
      dc_ = -dc_;
      if (ball_r_ != opp_r_) dr_ = sign(ball_r_ - opp_r_);
      continue;
    }
    ball_c_ = nc;
    const int points = agent_score_ + opp_score_;
    if (ball_c_ <= 0) {
      ++agent_score_;
      serve(points % 2 == 0 ? +1 : -1, (points / 2) % 2 == 0 ? +1 : -1);
      return +1.0;
    }
    if (ball_c_ >= kGrid - 1) {
      ++opp_score_;
      serve(points % 2 == 0 ? +1 : -1, (points / 2) % 2 == 0 ? +1 : -1);
      return -1.0;
    }
  }
  return 0.0;
}

StepResult MiniPong::step(int action) {
  if (done_) throw std::logic_error("minipong: step after episode end");
  if (action < 0 || action >= spec_.action_count)
    throw std::invalid_argument("minipong: action out of range");

  if (action == 1) agent_r_ = clamp_paddle(agent_r_ - kAgentSpeed, kAgentHalf);
  if (action == 2) agent_r_ = clamp_paddle(agent_r_ + kAgentSpeed, kAgentHalf);

  // Scripted opponent: reacts to the ball only once it is near its own side,
  // otherwise drifts back toward the center row. Its reach from center is a
  // few rows, so well-aimed or far balls score.
  if (dc_ < 0 && ball_c_ <= kOppReactCol)
    opp_r_ = clamp_paddle(opp_r_ + sign(ball_r_ - opp_r_), kOppHalf);
  else
    opp_r_ = clamp_paddle(opp_r_ + sign(kGrid / 2 - opp_r_), kOppHalf);

  const double reward = advance_ball();
  ++steps_;
  done_ = agent_score_ >= kWinScore || opp_score_ >= kWinScore || steps_ >= spec_.max_steps;
  return {render_frame(), reward, done_};
}

Tensor MiniPong::render_frame() const {
  Tensor frame = Tensor::zeros({kGrid, kGrid, 1});
  auto put = [&frame](int r, int c, double v) { frame.data[r * kGrid + c] = v; };
  auto put_block = [&put](int r, int c, double v) {
    // 2x2 block clipped at the walls; entities need enough pixel mass for
    // the stride-2 conv stack to resolve them.
    for (int dr = 0; dr < 2; ++dr)
      for (int dcol = 0; dcol < 2; ++dcol) {
        const int rr = std::min(r + dr, kGrid - 1);
        const int cc = std::min(c + dcol, kGrid - 1);
        put(rr, cc, v);
      }
  };
  if (prev_ball_r_ != ball_r_ || prev_ball_c_ != ball_c_)
    put_block(prev_ball_r_, prev_ball_c_, kTrailShade);
  for (int d = -kOppHalf; d <= kOppHalf; ++d) put(opp_r_ + d, kOppCol, kOppShade);
  for (int d = -kAgentHalf; d <= kAgentHalf; ++d) put(agent_r_ + d, kAgentCol, kAgentShade);
  put_block(ball_r_, ball_c_, kBallShade);
  return frame;
}

int MiniPong::visible_entity_cells() const {
  // Accounting of occupied cells from entity geometry (union over overlaps),
  // independent of the frame buffer the renderer fills.
  std::set<std::pair<int, int>> cells;
  auto add_block = [&cells](int r, int c) {
    for (int dr = 0; dr < 2; ++dr)
      for (int dcol = 0; dcol < 2; ++dcol)
        cells.insert({std::min(r + dr, kGrid - 1), std::min(c + dcol, kGrid - 1)});
  };
  if (prev_ball_r_ != ball_r_ || prev_ball_c_ != ball_c_) add_block(prev_ball_r_, prev_ball_c_);
  for (int d = -kOppHalf; d <= kOppHalf; ++d) cells.insert({opp_r_ + d, kOppCol});
  for (int d = -kAgentHalf; d <= kAgentHalf; ++d) cells.insert({agent_r_ + d, kAgentCol});
  add_block(ball_r_, ball_c_);
  return static_cast<int>(cells.size());
}

}  // namespace advrl
