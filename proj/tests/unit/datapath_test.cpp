#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <vector>

#include "mpcc/baselines/reno.hpp"
#include "mpcc/datapath/connection.hpp"
#include "mpcc/datapath/scheduler.hpp"
#include "mpcc/netsim/link.hpp"

using namespace mpcc;
using namespace mpcc::datapath;
using netsim::SimTime;

namespace {

SubflowState make_state(int cwnd, int q, int f, Mode mode, std::int64_t srtt = 10000) {
  SubflowState s;
  s.cwnd_pkts = cwnd;
  s.queued_pkts = q;
  s.inflight_pkts = f;
  s.mode = mode;
  s.srtt_us = srtt;
  return s;
}

// A simulator with `m` links and one connection spanning them.
struct Rig {
  netsim::Simulator sim;
  std::vector<std::unique_ptr<netsim::Link>> links;
  std::unique_ptr<Connection> conn;

  Rig(std::vector<netsim::LinkSpec> specs, ControlMode mode, DatapathConfig cfg = {}, int cwnd_max = 200) {
    std::vector<netsim::Link*> paths;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      links.push_back(std::make_unique<netsim::Link>(sim, specs[i], netsim::Rng(100 + i), static_cast<int>(i)));
      paths.push_back(links.back().get());
    }
    conn = std::make_unique<Connection>(sim, 0, paths, std::vector<int>(specs.size(), cwnd_max), cfg, mode);
    for (auto& l : links) {
      l->set_data_sink([this](const netsim::Packet& p) { conn->on_data(p); });
      l->set_ack_sink([this](const netsim::Packet& p) { conn->on_ack(p); });
    }
  }
};

netsim::LinkSpec spec(double mbps, std::int64_t prop_us, int buffer = 100, double loss = 0.0) {
  netsim::LinkSpec s;
  s.rate_bps = mbps * 1e6;
  s.prop_delay_us = prop_us;
  s.buffer_pkts = buffer;
  s.loss_prob = loss;
  return s;
}

}  // namespace

TEST(Availability, HeadroomAndMode) {
  EXPECT_TRUE(availability(make_state(10, 3, 6, Mode::kOpen)));
  EXPECT_FALSE(availability(make_state(10, 4, 6, Mode::kOpen)));
  EXPECT_FALSE(availability(make_state(10, 0, 0, Mode::kRecovery)));
}

TEST(PickSubflow, LowestRttAmongAvailable) {
  std::vector<SubflowState> s{make_state(10, 0, 0, Mode::kOpen, 10000), make_state(10, 0, 0, Mode::kOpen, 20000)};
  EXPECT_EQ(pick_subflow(s), 0);
  s[0].mode = Mode::kRecovery;
  EXPECT_EQ(pick_subflow(s), 1);
  s[1].inflight_pkts = 10;
  EXPECT_FALSE(pick_subflow(s).has_value());
}

TEST(PickSubflow, TiesGoToLowestIndex) {
  std::vector<SubflowState> s{make_state(10, 0, 9, Mode::kOpen, 5000), make_state(10, 0, 0, Mode::kOpen, 5000),
                              make_state(10, 0, 0, Mode::kOpen, 5000)};
  EXPECT_EQ(pick_subflow(s), 0);
  s[0].inflight_pkts = 10;
  EXPECT_EQ(pick_subflow(s), 1);
}

TEST(PickSubflow, MatchesBruteForceOnRandomStates) {
  netsim::Rng rng(5);
  for (int trial = 0; trial < 10000; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(4));
    std::vector<SubflowState> s;
    for (int i = 0; i < m; ++i) {
      s.push_back(make_state(4 + static_cast<int>(rng.below(8)), static_cast<int>(rng.below(5)),
                             static_cast<int>(rng.below(8)), rng.bernoulli(0.3) ? Mode::kRecovery : Mode::kOpen,
                             1000 * static_cast<std::int64_t>(1 + rng.below(4))));
    }
    int expect = -1;
    for (int i = 0; i < m; ++i) {
      const auto& x = s[static_cast<std::size_t>(i)];
      const bool avail = x.cwnd_pkts > x.queued_pkts + x.inflight_pkts && x.mode == Mode::kOpen;
      if (avail && (expect < 0 || x.srtt_us < s[static_cast<std::size_t>(expect)].srtt_us)) expect = i;
    }
    const auto got = pick_subflow(s);
    ASSERT_EQ(got.value_or(-1), expect) << "trial " << trial;
  }
}

TEST(AllocationProbability, IndicatorOverAvailableCount) {
  std::vector<SubflowState> s{make_state(10, 0, 0, Mode::kOpen, 10000), make_state(10, 0, 0, Mode::kOpen, 20000)};
  EXPECT_DOUBLE_EQ(allocation_probability(s, 0), 0.5);
  EXPECT_DOUBLE_EQ(allocation_probability(s, 1), 0.0);
  s[0].mode = Mode::kRecovery;
  EXPECT_DOUBLE_EQ(allocation_probability(s, 1), 1.0);
  std::vector<SubflowState> three{make_state(10, 0, 0, Mode::kOpen, 5), make_state(10, 0, 0, Mode::kOpen, 5),
                                  make_state(10, 0, 0, Mode::kOpen, 9)};
  EXPECT_DOUBLE_EQ(allocation_probability(three, 0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(allocation_probability(three, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(allocation_probability(three, 2), 0.0);
}

TEST(AllocationProbability, NoneAvailableIsAnError) {
  std::vector<SubflowState> s{make_state(10, 0, 0, Mode::kRecovery)};
  EXPECT_THROW(allocation_probability(s, 0), std::domain_error);
}

TEST(AssignedLoad, ScalesOfferedLoad) {
  std::vector<SubflowState> one{make_state(10, 0, 0, Mode::kOpen)};
  EXPECT_DOUBLE_EQ(assigned_load(one, 0, 100e6), 100e6);
  std::vector<SubflowState> two{make_state(10, 0, 0, Mode::kOpen, 1), make_state(10, 0, 0, Mode::kOpen, 2)};
  EXPECT_DOUBLE_EQ(assigned_load(two, 0, 100e6), 50e6);
  EXPECT_DOUBLE_EQ(assigned_load(two, 0, 0.0), 0.0);
}

TEST(AllocationProbability, BoundedOnRandomStates) {
  netsim::Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<SubflowState> s;
    for (int i = 0; i < 3; ++i) {
      s.push_back(make_state(5, 0, static_cast<int>(rng.below(7)), Mode::kOpen,
                             static_cast<std::int64_t>(1 + rng.below(3))));
    }
    int avail = 0;
    for (const auto& x : s) avail += availability(x) ? 1 : 0;
    if (avail == 0) continue;
    for (int i = 0; i < 3; ++i) {
      const double p = allocation_probability(s, i);
      ASSERT_GE(p, 0.0);
      ASSERT_LE(p, 1.0);
      if (avail == 1 && availability(s[static_cast<std::size_t>(i)])) ASSERT_DOUBLE_EQ(p, 1.0);
    }
  }
}

TEST(Connection, RttSampleOfSinglePacket) {
  Rig rig({spec(12, 2000)}, ControlMode::kBaseline);
  baselines::Reno reno;
  rig.conn->set_controller(&reno);
  std::vector<AckRecord> acks;
  rig.conn->add_ack_listener([&](const AckRecord& r) { acks.push_back(r); });
  rig.conn->add_app_data(netsim::kMtuBytes);
  rig.conn->start();
  rig.sim.run();
  ASSERT_EQ(acks.size(), 1u);
  EXPECT_EQ(acks[0].rtt_us, 1000 + 2000 + 2000);  // serialization + both propagation legs
  EXPECT_EQ(acks[0].delivered_bytes_delta, netsim::kMtuBytes);
  EXPECT_EQ(rig.conn->goodput_bytes(), netsim::kMtuBytes);
}

TEST(Connection, SrttIsEighthGainEwma) {
  Rig rig({spec(12, 2000)}, ControlMode::kBaseline);
  baselines::Reno reno;
  rig.conn->set_controller(&reno);
  std::vector<std::int64_t> rtts;
  std::vector<std::int64_t> srtts;
  rig.conn->add_ack_listener([&](const AckRecord& r) {
    rtts.push_back(r.rtt_us);
    srtts.push_back(rig.conn->subflow(0).srtt_us);
  });
  rig.conn->add_app_data(20 * netsim::kMtuBytes);
  rig.conn->start();
  rig.sim.run();
  ASSERT_GE(rtts.size(), 3u);
  std::int64_t oracle = rtts[0];
  for (std::size_t k = 1; k < rtts.size(); ++k) {
    oracle = oracle + (rtts[k] - oracle) / 8;
    ASSERT_EQ(srtts[k], oracle);
  }
}

TEST(Connection, StartPhaseGrowsOnePerAckAndExits) {
  Rig rig({spec(20, 5000)}, ControlMode::kAgent);
  std::vector<PhaseEvent> phases;
  std::vector<int> cwnd_after_ack;
  rig.conn->add_phase_listener([&](const PhaseEvent& e) { phases.push_back(e); });
  rig.conn->add_ack_listener([&](const AckRecord&) { cwnd_after_ack.push_back(rig.conn->subflow(0).cwnd_pkts); });
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  EXPECT_EQ(rig.conn->subflow(0).cwnd_pkts, 4);
  rig.sim.run_until(SimTime::from_ms(200));
  ASSERT_FALSE(phases.empty());
  EXPECT_EQ(phases[0].from, Phase::kStart);
  EXPECT_EQ(phases[0].to, Phase::kTrain);
  EXPECT_GE(rig.conn->subflow(0).cwnd_pkts, 16);
  // Listeners run before the ACK is processed; the first ACK sees 4 and
  // each following one sees the previous increment.
  for (std::size_t k = 1; k < 8 && k < cwnd_after_ack.size(); ++k) {
    EXPECT_EQ(cwnd_after_ack[k], cwnd_after_ack[k - 1] + 1);
  }
}

TEST(Connection, StartNeedsStableAcks) {
  DatapathConfig cfg;
  cfg.initial_cwnd = 16;
  Rig rig({spec(20, 5000)}, ControlMode::kAgent, cfg);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  // 3 ACKs in: cwnd is past 16 but the stability count is not met.
  int acks = 0;
  rig.conn->add_ack_listener([&](const AckRecord&) { ++acks; });
  while (acks < 3 && rig.sim.step()) {
  }
  EXPECT_EQ(rig.conn->subflow(0).phase, Phase::kStart);
}

TEST(Connection, LossInStartResetsStability) {
  Rig rig({spec(20, 5000)}, ControlMode::kAgent);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  rig.sim.run_until(SimTime::from_ms(12));
  rig.conn->force_loss_signal(0, LossSignal::kDupAcks);
  EXPECT_EQ(rig.conn->subflow(0).mode, Mode::kRecovery);
  EXPECT_FALSE(availability(rig.conn->subflow(0)));
  EXPECT_EQ(rig.conn->subflow(0).phase, Phase::kStart);
}

TEST(Connection, EnforceCwndClampsDownImmediatelyAndRampsUp) {
  Rig rig({spec(20, 5000)}, ControlMode::kAgent, {}, 60);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  rig.sim.run_until(SimTime::from_ms(300));
  ASSERT_EQ(rig.conn->subflow(0).phase, Phase::kTrain);
  rig.conn->enforce_cwnd(0, 20);
  rig.sim.run_until(SimTime::from_ms(400));
  EXPECT_EQ(rig.conn->subflow(0).cwnd_pkts, 20);
  rig.conn->enforce_cwnd(0, 15);
  EXPECT_EQ(rig.conn->subflow(0).cwnd_pkts, 15);
  rig.conn->enforce_cwnd(0, 17);
  std::vector<int> seen;
  rig.conn->add_ack_listener([&](const AckRecord&) { seen.push_back(rig.conn->subflow(0).cwnd_pkts); });
  rig.sim.run_until(SimTime::from_ms(401));
  rig.sim.run_until(SimTime::from_ms(450));
  ASSERT_GE(seen.size(), 3u);
  EXPECT_EQ(seen[0], 15);
  EXPECT_EQ(seen[1], 16);
  EXPECT_EQ(seen[2], 17);
  EXPECT_EQ(rig.conn->subflow(0).cwnd_pkts, 17);
  rig.conn->enforce_cwnd(0, 1);
  EXPECT_EQ(rig.conn->subflow(0).cwnd_pkts, 4);
  EXPECT_GT(rig.conn->counters(0).clamped_targets, 0u);
}

TEST(Connection, CwndStaysInBoundsUnderRandomTargets) {
  Rig rig({spec(20, 3000), spec(10, 6000)}, ControlMode::kAgent, {}, 50);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  netsim::Rng rng(4);
  bool ok = true;
  for (int k = 0; k < 300; ++k) {
    rig.sim.run_until(SimTime::from_ms(10 * (k + 1)));
    for (int i = 0; i < 2; ++i) {
      rig.conn->enforce_cwnd(i, static_cast<int>(rng.below(80)) - 10);
      const int c = rig.conn->subflow(i).cwnd_pkts;
      if (c < 4 || c > 50) ok = false;
    }
  }
  EXPECT_TRUE(ok);
}

TEST(Connection, DupAcksEnterRecoveryAndRetransmissionExits) {
  Rig rig({spec(20, 2000, 100, 0.0)}, ControlMode::kBaseline);
  baselines::Reno reno;
  rig.conn->set_controller(&reno);
  // Drop exactly one data packet by intercepting the data sink.
  bool dropped = false;
  rig.links[0]->set_data_sink([&](const netsim::Packet& p) {
    if (!dropped && p.seq == 20 && !p.retransmission) {
      dropped = true;
      return;
    }
    rig.conn->on_data(p);
  });
  bool saw_recovery = false;
  rig.conn->add_ack_listener([&](const AckRecord&) {
    if (rig.conn->subflow(0).mode == Mode::kRecovery) saw_recovery = true;
  });
  rig.conn->add_app_data(200 * netsim::kMtuBytes);
  rig.conn->start();
  rig.sim.run();
  EXPECT_TRUE(dropped);
  EXPECT_TRUE(saw_recovery);
  EXPECT_EQ(rig.conn->counters(0).fast_retransmits, 1u);
  EXPECT_EQ(rig.conn->subflow(0).mode, Mode::kOpen);
  EXPECT_EQ(rig.conn->goodput_bytes(), 200 * netsim::kMtuBytes);
  EXPECT_EQ(rig.conn->counters(0).timeouts, 0u);
}

TEST(Connection, LossDuringRecoveryStaysInRecovery) {
  Rig rig({spec(20, 2000)}, ControlMode::kAgent);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  rig.sim.run_until(SimTime::from_ms(50));
  rig.conn->force_loss_signal(0, LossSignal::kDupAcks);
  const auto episodes = rig.conn->counters(0).recovery_episodes;
  rig.conn->force_loss_signal(0, LossSignal::kDupAcks);
  EXPECT_EQ(rig.conn->subflow(0).mode, Mode::kRecovery);
  EXPECT_EQ(rig.conn->counters(0).recovery_episodes, episodes);
}

TEST(Connection, TimeoutRecoversFromTotalLoss) {
  Rig rig({spec(20, 2000)}, ControlMode::kBaseline);
  baselines::Reno reno;
  rig.conn->set_controller(&reno);
  int blackhole = 0;
  rig.links[0]->set_data_sink([&](const netsim::Packet& p) {
    if (p.seq >= 10 && blackhole < 30) {
      ++blackhole;
      return;
    }
    rig.conn->on_data(p);
  });
  rig.conn->add_app_data(60 * netsim::kMtuBytes);
  rig.conn->start();
  rig.sim.run();
  EXPECT_GE(rig.conn->counters(0).timeouts, 1u);
  EXPECT_EQ(rig.conn->goodput_bytes(), 60 * netsim::kMtuBytes);
}

TEST(Connection, AgentModeDoesNotCutCwndOnLoss) {
  Rig rig({spec(20, 2000)}, ControlMode::kAgent, {}, 60);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  rig.sim.run_until(SimTime::from_ms(200));
  ASSERT_EQ(rig.conn->subflow(0).phase, Phase::kTrain);
  rig.conn->enforce_cwnd(0, 30);
  rig.sim.run_until(SimTime::from_ms(300));
  const int before = rig.conn->subflow(0).cwnd_pkts;
  rig.conn->force_loss_signal(0, LossSignal::kDupAcks);
  EXPECT_EQ(rig.conn->subflow(0).cwnd_pkts, before);
}

TEST(Connection, ProbeDrainsQueueAndRestoresTarget) {
  DatapathConfig cfg;
  cfg.probe_interval_us = 1'000'000;
  Rig rig({spec(12, 5000, 200)}, ControlMode::kAgent, cfg, 150);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  rig.sim.run_until(SimTime::from_ms(200));
  ASSERT_EQ(rig.conn->subflow(0).phase, Phase::kTrain);
  rig.conn->enforce_cwnd(0, 60);  // BDP is 10 packets: a standing queue builds
  std::int64_t srtt_before = 0;
  std::int64_t probe_rtt = 0;
  std::vector<Phase> transitions;
  rig.conn->add_phase_listener([&](const PhaseEvent& e) {
    transitions.push_back(e.to);
    if (e.to == Phase::kProbe) srtt_before = rig.conn->subflow(0).srtt_us;
    if (e.from == Phase::kProbe) probe_rtt = rig.conn->subflow(0).base_rtt_us;
  });
  rig.sim.run_until(SimTime::from_ms(2500));
  ASSERT_GE(transitions.size(), 2u);
  EXPECT_EQ(transitions[0], Phase::kProbe);
  EXPECT_EQ(transitions[1], Phase::kTrain);
  EXPECT_LT(probe_rtt, srtt_before);
  // Propagation 10 ms plus at most the probe window of serialization.
  EXPECT_GE(probe_rtt, 11000);
  EXPECT_LE(probe_rtt, 11000 + 4 * 1000);
  EXPECT_EQ(rig.conn->subflow(0).target_cwnd, 60);
}

TEST(Connection, StaleMinRttForcesProbe) {
  DatapathConfig cfg;
  cfg.probe_interval_us = 1'000'000'000;  // never by schedule
  cfg.min_rtt_lifetime_us = 500'000;
  Rig rig({spec(12, 5000, 200)}, ControlMode::kAgent, cfg, 150);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  rig.sim.run_until(SimTime::from_ms(200));
  rig.conn->enforce_cwnd(0, 40);
  bool probed = false;
  rig.conn->add_phase_listener([&](const PhaseEvent& e) {
    if (e.to == Phase::kProbe) probed = true;
  });
  rig.sim.run_until(SimTime::from_ms(1500));
  EXPECT_TRUE(probed);
}

TEST(Connection, CouplingAsymmetryShiftsShare) {
  // Oversizing subflow 0's window builds its queue; once its srtt exceeds
  // subflow 1's, new packets favor subflow 1.
  Rig rig({spec(10, 2000, 300), spec(10, 4000, 300)}, ControlMode::kAgent, {}, 250);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  rig.sim.run_until(SimTime::from_ms(300));
  rig.conn->enforce_cwnd(0, 8);
  rig.conn->enforce_cwnd(1, 8);
  rig.sim.run_until(SimTime::from_ms(600));
  const auto sent0_a = rig.conn->counters(0).packets_sent;
  const auto sent1_a = rig.conn->counters(1).packets_sent;
  const auto srtt0_before = rig.conn->subflow(0).srtt_us;
  rig.sim.run_until(SimTime::from_ms(900));
  const double share_before = static_cast<double>(rig.conn->counters(0).packets_sent - sent0_a) /
                              static_cast<double>(rig.conn->counters(0).packets_sent - sent0_a +
                                                  rig.conn->counters(1).packets_sent - sent1_a);
  rig.conn->enforce_cwnd(0, 200);
  rig.sim.run_until(SimTime::from_ms(1400));
  EXPECT_GT(rig.conn->subflow(0).srtt_us, srtt0_before);
  EXPECT_GT(rig.conn->subflow(0).srtt_us, rig.conn->subflow(1).srtt_us);
  // Freeze subflow 0's window at its current size and measure where new
  // packets go next.
  rig.conn->enforce_cwnd(1, 60);
  const auto s0 = rig.conn->counters(0).packets_sent;
  const auto s1 = rig.conn->counters(1).packets_sent;
  rig.sim.run_until(SimTime::from_ms(1700));
  const double share_after = static_cast<double>(rig.conn->counters(0).packets_sent - s0) /
                             static_cast<double>(rig.conn->counters(0).packets_sent - s0 +
                                                 rig.conn->counters(1).packets_sent - s1);
  EXPECT_LT(share_after, share_before + 1e-12);
  (void)sent1_a;
}

TEST(Connection, DeliveredBytesNonDecreasingAndMinRttBound) {
  Rig rig({spec(10, 3000, 20, 0.01)}, ControlMode::kAgent, {}, 60);
  rig.conn->set_unbounded_backlog();
  rig.conn->start();
  std::int64_t last_delivered = 0;
  bool ok = true;
  rig.conn->add_ack_listener([&](const AckRecord& r) {
    const auto& st = rig.conn->subflow(0);
    if (st.delivered_bytes < last_delivered) ok = false;
    last_delivered = st.delivered_bytes;
    if (st.min_rtt_us > 0 && st.last_rtt_us > 0 && st.min_rtt_us > r.rtt_us && !st.min_rtt_stale) ok = false;
  });
  netsim::Rng rng(2);
  for (int k = 0; k < 300; ++k) {
    rig.sim.run_until(SimTime::from_ms(10 * (k + 1)));
    rig.conn->enforce_cwnd(0, 4 + static_cast<int>(rng.below(50)));
  }
  EXPECT_TRUE(ok);
}
