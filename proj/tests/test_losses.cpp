#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "termpref/losses.hpp"
#include "termpref/rng.hpp"

using namespace termpref;

namespace {

SequenceScore random_score(Rng& rng, std::size_t len, bool with_mask, bool with_ref) {
  SequenceScore s;
  for (std::size_t i = 0; i < len; ++i) {
    s.token_logprobs.push_back(-4.0 * rng.next_double() - 0.01);
  }
  if (with_ref) {
    std::vector<double> ref;
    for (std::size_t i = 0; i < len; ++i) ref.push_back(-4.0 * rng.next_double() - 0.01);
    s.ref_token_logprobs = std::move(ref);
  }
  if (with_mask) {
    for (std::size_t i = 0; i < len; ++i) {
      if (rng.next_bool()) s.mask.push_back(i);
    }
    if (s.mask.empty()) s.mask.push_back(rng.uniform_index(len));
  }
  return s;
}

double plain_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

using PairLoss = std::function<LossValue(const SequenceScore&, const SequenceScore&)>;

// Central finite differences on every token log-probability of both
// sequences, compared at 1e-5 relative tolerance.
void check_pair_gradients(const PairLoss& f, const SequenceScore& w, const SequenceScore& l) {
  const LossValue at = f(w, l);
  REQUIRE(at.grad_w.size() == w.token_logprobs.size());
  // Loss terms with no dispreferred side leave grad_l empty, meaning zero.
  REQUIRE((at.grad_l.size() == l.token_logprobs.size() || at.grad_l.empty()));
  const double h = 1e-6;
  for (std::size_t i = 0; i < w.token_logprobs.size(); ++i) {
    SequenceScore up = w;
    SequenceScore down = w;
    up.token_logprobs[i] += h;
    down.token_logprobs[i] -= h;
    const double fd = (f(up, l).value - f(down, l).value) / (2.0 * h);
    CHECK(oracle::rel_err(at.grad_w[i], fd) < 1e-5);
  }
  for (std::size_t i = 0; i < l.token_logprobs.size(); ++i) {
    SequenceScore up = l;
    SequenceScore down = l;
    up.token_logprobs[i] += h;
    down.token_logprobs[i] -= h;
    const double fd = (f(w, up).value - f(w, down).value) / (2.0 * h);
    const double got = at.grad_l.empty() ? 0.0 : at.grad_l[i];
    CHECK(oracle::rel_err(got, fd) < 1e-5);
  }
}

// The margin losses have a gradient kink where |margin - target| = 1;
// finite differences straddling it are meaningless, so such draws are
// skipped.
bool near_smooth_l1_kink(const SequenceScore& w, const SequenceScore& l, double target) {
  const double full = plain_mean(w.token_logprobs) - plain_mean(l.token_logprobs);
  double masked_w = 0.0;
  for (std::size_t i : w.mask) masked_w += w.token_logprobs[i];
  masked_w /= static_cast<double>(w.mask.size());
  double masked_l = 0.0;
  for (std::size_t i : l.mask) masked_l += l.token_logprobs[i];
  masked_l /= static_cast<double>(l.mask.size());
  const double masked = masked_w - masked_l;
  return std::fabs(std::fabs(full - target) - 1.0) < 1e-3 ||
         std::fabs(std::fabs(masked - target) - 1.0) < 1e-3;
}

}  // namespace

TEST_CASE("mean logprob equals the log of the geometric mean probability") {
  SequenceScore s;
  s.token_logprobs = {std::log(0.5), std::log(0.5)};
  CHECK(mean_logprob(s, false) == doctest::Approx(std::log(0.5)).epsilon(1e-15));

  Rng rng(3001);
  for (int round = 0; round < 20; ++round) {
    SequenceScore r = random_score(rng, 50, false, false);
    const long double want = oracle::product_root_log(r.token_logprobs);
    CHECK(std::fabs(mean_logprob(r, false) - static_cast<double>(want)) < 1e-10);
  }
}

TEST_CASE("masked mean restricts to the mask indices") {
  SequenceScore s;
  s.token_logprobs = {-1.0, -2.0, -3.0, -4.0};
  s.mask = {1, 3};
  CHECK(mean_logprob(s, true) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(mean_logprob(s, false) == doctest::Approx(-2.5).epsilon(1e-15));
}

TEST_CASE("mean logprob input validation") {
  SequenceScore empty;
  CHECK_THROWS_AS(mean_logprob(empty, false), std::domain_error);
  SequenceScore no_mask;
  no_mask.token_logprobs = {-1.0};
  CHECK_THROWS_AS(mean_logprob(no_mask, true), std::domain_error);
  SequenceScore bad_mask;
  bad_mask.token_logprobs = {-1.0, -2.0};
  bad_mask.mask = {5};
  CHECK_THROWS_AS(mean_logprob(bad_mask, true), std::out_of_range);
}

TEST_CASE("smooth l1 values and derivative") {
  CHECK(smooth_l1(0.5, 0.0).value == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(smooth_l1(3.0, 0.0).value == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(smooth_l1(3.0, 0.0).deriv == 1.0);
  CHECK(smooth_l1(-3.0, 0.0).deriv == -1.0);
  CHECK(smooth_l1(2.0, 2.0).value == 0.0);
  CHECK(smooth_l1(2.0, 2.0).deriv == 0.0);

  Rng rng(3002);
  for (int round = 0; round < 200; ++round) {
    const double x = rng.uniform(-3.0, 3.0);
    const double y = rng.uniform(-3.0, 3.0);
    if (std::fabs(std::fabs(x - y) - 1.0) < 1e-4) continue;  // kink
    const double h = 1e-6;
    const double fd = (smooth_l1(x + h, y).value - smooth_l1(x - h, y).value) / (2.0 * h);
    CHECK(oracle::rel_err(smooth_l1(x, y).deriv, fd) < 1e-6);
    CHECK(std::fabs(smooth_l1(x, y).deriv) <= 1.0);
  }
}

TEST_CASE("smooth l1 is continuous with continuous derivative at the boundary") {
  const double eps = 1e-9;
  const SmoothL1 inside = smooth_l1(1.0 - eps, 0.0);
  const SmoothL1 outside = smooth_l1(1.0 + eps, 0.0);
  CHECK(std::fabs(inside.value - outside.value) < 1e-8);
  CHECK(std::fabs(inside.deriv - outside.deriv) < 1e-8);
  CHECK(smooth_l1(1.0, 0.0).value == 0.5);
}

TEST_CASE("preference loss is exactly zero at the target margin") {
  SequenceScore w;
  w.token_logprobs = {-1.0, -1.0};
  SequenceScore l;
  l.token_logprobs = {-3.0, -3.0};
  // margin = -1 - (-3) = 2 = 1/(2*0.25)
  const LossValue loss = loss_po(w, l, 0.25);
  CHECK(loss.value == 0.0);
  for (double g : loss.grad_w) CHECK(g == 0.0);
  for (double g : loss.grad_l) CHECK(g == 0.0);
}

TEST_CASE("preference loss values away from the target") {
  SequenceScore w;
  w.token_logprobs = {-2.0};
  SequenceScore l;
  l.token_logprobs = {-2.0};
  CHECK(loss_po(w, l, 0.25).value == doctest::Approx(1.5).epsilon(1e-15));

  SequenceScore w2;
  w2.token_logprobs = {-0.5};
  SequenceScore l2;
  l2.token_logprobs = {-2.0};
  // margin 1.5, target 2: quadratic region
  CHECK(loss_po(w2, l2, 0.25).value == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("masked preference loss with full mask equals the unmasked loss") {
  Rng rng(3003);
  for (int round = 0; round < 50; ++round) {
    SequenceScore w = random_score(rng, 1 + rng.uniform_index(8), false, false);
    SequenceScore l = random_score(rng, 1 + rng.uniform_index(8), false, false);
    for (std::size_t i = 0; i < w.token_logprobs.size(); ++i) w.mask.push_back(i);
    for (std::size_t i = 0; i < l.token_logprobs.size(); ++i) l.mask.push_back(i);
    const LossValue masked = loss_mpo(w, l, 0.25);
    const LossValue full = loss_po(w, l, 0.25);
    CHECK(std::fabs(masked.value - full.value) <= 1e-12);
    for (std::size_t i = 0; i < masked.grad_w.size(); ++i) {
      CHECK(std::fabs(masked.grad_w[i] - full.grad_w[i]) <= 1e-12);
    }
    for (std::size_t i = 0; i < masked.grad_l.size(); ++i) {
      CHECK(std::fabs(masked.grad_l[i] - full.grad_l[i]) <= 1e-12);
    }
  }
}

TEST_CASE("masked preference loss on single-token masks") {
  SequenceScore w;
  w.token_logprobs = {-9.0, -1.0, -9.0};
  w.mask = {1};
  SequenceScore l;
  l.token_logprobs = {-3.0, -9.0};
  l.mask = {0};
  // masked margin = -1 - (-3) = 2 = target
  CHECK(loss_mpo(w, l, 0.25).value == 0.0);
}

TEST_CASE("masked preference loss equals the loss on extracted sublists") {
  Rng rng(3004);
  for (int round = 0; round < 50; ++round) {
    SequenceScore w = random_score(rng, 2 + rng.uniform_index(8), true, false);
    SequenceScore l = random_score(rng, 2 + rng.uniform_index(8), true, false);
    SequenceScore w_sub;
    for (std::size_t i : w.mask) w_sub.token_logprobs.push_back(w.token_logprobs[i]);
    SequenceScore l_sub;
    for (std::size_t i : l.mask) l_sub.token_logprobs.push_back(l.token_logprobs[i]);
    CHECK(std::fabs(loss_mpo(w, l, 0.25).value - loss_po(w_sub, l_sub, 0.25).value) <= 1e-12);
  }
}

TEST_CASE("supervised loss scales with alpha") {
  SequenceScore w;
  w.token_logprobs = {-0.5, -0.5};
  CHECK(loss_sft(w, 1.0).value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(loss_sft(w, 10.0).value == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(loss_sft(w, 0.0).value == 0.0);
  CHECK(loss_sft(w, 1.0).grad_l.empty());
}

TEST_CASE("masked supervised loss") {
  SequenceScore w;
  w.token_logprobs = {-1.0, -2.0, -5.0};
  w.mask = {1};
  CHECK(loss_msft(w, 1.0).value == doctest::Approx(2.0).epsilon(1e-15));

  SequenceScore full = w;
  full.mask = {0, 1, 2};
  const LossValue masked = loss_msft(full, 3.0);
  const LossValue plain = loss_sft(full, 3.0);
  CHECK(std::fabs(masked.value - plain.value) <= 1e-12);
  for (std::size_t i = 0; i < masked.grad_w.size(); ++i) {
    CHECK(std::fabs(masked.grad_w[i] - plain.grad_w[i]) <= 1e-12);
  }
}

TEST_CASE("reference-model loss value matches its formula") {
  SequenceScore w;
  w.token_logprobs = {-0.5, -0.5};
  w.ref_token_logprobs = std::vector<double>{-0.5, -0.5};
  SequenceScore l;
  l.token_logprobs = {-2.0};
  l.ref_token_logprobs = std::vector<double>{-2.0};
  // Both ratios vanish, so the squared term is (0 - 0 - 2)^2 = 4.
  CHECK(loss_dcpo(w, l, 0.25).value == doctest::Approx(4.5).epsilon(1e-15));

  Rng rng(3005);
  for (int round = 0; round < 100; ++round) {
    SequenceScore rw = random_score(rng, 1 + rng.uniform_index(6), false, true);
    SequenceScore rl = random_score(rng, 1 + rng.uniform_index(6), false, true);
    const double mw = plain_mean(rw.token_logprobs);
    const double ml = plain_mean(rl.token_logprobs);
    const double rw_ref = plain_mean(*rw.ref_token_logprobs);
    const double rl_ref = plain_mean(*rl.ref_token_logprobs);
    const double diff = (mw - rw_ref) - (ml - rl_ref) - 2.0;
    const double want = -mw + diff * diff;
    CHECK(loss_dcpo(rw, rl, 0.25).value == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("reference-model loss requires reference scores") {
  SequenceScore w;
  w.token_logprobs = {-0.5};
  SequenceScore l;
  l.token_logprobs = {-2.0};
  CHECK_THROWS_AS(loss_dcpo(w, l, 0.25), std::domain_error);
}

TEST_CASE("combined loss composes its enabled components") {
  Rng rng(3006);
  for (int round = 0; round < 50; ++round) {
    SequenceScore w = random_score(rng, 2 + rng.uniform_index(6), true, false);
    SequenceScore l = random_score(rng, 2 + rng.uniform_index(6), true, false);

    const LossConfig s3 = setting_config(3);
    const double want3 = loss_sft(w, 1.0).value + loss_po(w, l, s3.beta).value;
    CHECK(loss_term(w, l, s3).value == doctest::Approx(want3).epsilon(1e-12));

    const LossConfig s6 = setting_config(6);
    const double want6 = loss_po(w, l, s6.beta).value + loss_mpo(w, l, s6.beta).value +
                         10.0 * (loss_sft(w, 1.0).value + loss_msft(w, 1.0).value);
    CHECK(loss_term(w, l, s6).value == doctest::Approx(want6).epsilon(1e-12));
  }
}

TEST_CASE("alpha scales the supervised group exactly once") {
  Rng rng(3007);
  SequenceScore w = random_score(rng, 5, true, false);
  SequenceScore l = random_score(rng, 4, true, false);
  LossConfig sft_only;
  sft_only.enable_sft = true;
  sft_only.alpha = 10.0;
  CHECK(loss_term(w, l, sft_only).value ==
        doctest::Approx(loss_sft(w, 10.0).value).epsilon(1e-14));
  CHECK(loss_term(w, l, baseline_config()).value ==
        doctest::Approx(loss_sft(w, 1.0).value).epsilon(1e-14));
}

TEST_CASE("setting table flags") {
  const auto cfg = [](int id) { return setting_config(id); };
  CHECK((cfg(1).enable_msft && !cfg(1).enable_sft && !cfg(1).enable_po && !cfg(1).enable_mpo));
  CHECK(cfg(1).alpha == 1.0);
  CHECK((cfg(2).enable_sft && cfg(2).enable_msft && cfg(2).alpha == 1.0));
  CHECK((cfg(3).enable_sft && cfg(3).enable_po && cfg(3).alpha == 1.0));
  CHECK((cfg(4).enable_msft && cfg(4).enable_mpo && cfg(4).alpha == 10.0));
  CHECK((cfg(5).enable_sft && cfg(5).enable_mpo && cfg(5).alpha == 10.0));
  CHECK((cfg(6).enable_po && cfg(6).enable_mpo && cfg(6).enable_sft && cfg(6).enable_msft));
  CHECK(cfg(6).alpha == 10.0);
  for (int id = 1; id <= 6; ++id) CHECK(cfg(id).beta == 0.25);
  CHECK_THROWS_AS(setting_config(0), std::invalid_argument);
  CHECK_THROWS_AS(setting_config(7), std::invalid_argument);
  const LossConfig base = baseline_config();
  CHECK((base.enable_sft && !base.enable_msft && !base.enable_po && !base.enable_mpo));
  CHECK(base.alpha == 1.0);
}

TEST_CASE("loss config validation") {
  LossConfig off;
  CHECK_THROWS_AS(validate(off), std::invalid_argument);
  LossConfig bad_beta = baseline_config();
  bad_beta.beta = 0.0;
  CHECK_THROWS_AS(validate(bad_beta), std::invalid_argument);
  LossConfig bad_alpha = baseline_config();
  bad_alpha.alpha = -1.0;
  CHECK_THROWS_AS(validate(bad_alpha), std::invalid_argument);
  CHECK_NOTHROW(validate(baseline_config()));
}

TEST_CASE("gradients of every loss match finite differences") {
  Rng rng(3008);
  const double beta = 0.25;
  for (int round = 0; round < 40; ++round) {
    SequenceScore w = random_score(rng, 2 + rng.uniform_index(5), true, true);
    SequenceScore l = random_score(rng, 2 + rng.uniform_index(5), true, true);
    if (near_smooth_l1_kink(w, l, 1.0 / (2.0 * beta))) continue;

    check_pair_gradients(
        [&](const SequenceScore& a, const SequenceScore& b) { return loss_po(a, b, beta); }, w, l);
    check_pair_gradients(
        [&](const SequenceScore& a, const SequenceScore& b) { return loss_mpo(a, b, beta); }, w, l);
    check_pair_gradients(
        [&](const SequenceScore& a, const SequenceScore& b) {
          (void)b;
          return loss_sft(a, 2.5);
        },
        w, l);
    check_pair_gradients(
        [&](const SequenceScore& a, const SequenceScore& b) {
          (void)b;
          return loss_msft(a, 2.5);
        },
        w, l);
    check_pair_gradients(
        [&](const SequenceScore& a, const SequenceScore& b) { return loss_dcpo(a, b, beta); }, w,
        l);
    for (int setting = 1; setting <= 6; ++setting) {
      const LossConfig config = setting_config(setting);
      check_pair_gradients(
          [&](const SequenceScore& a, const SequenceScore& b) { return loss_term(a, b, config); },
          w, l);
    }
  }
}
