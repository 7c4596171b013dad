// Copyright 2026 The Boomarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "boomarm/server.hpp"

#include <boost/asio.hpp>
#include <chrono>
#include <cmath>
#include <ostream>
#include <set>

#include "boomarm/errors.hpp"
#include "boomarm/json_io.hpp"
#include "boomarm/log.hpp"

namespace boomarm {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

namespace {

Vec3 vec_field(const json& j, const char* key) {
  if (!j.contains(key)) return Vec3::Zero();
  return vec3_from_json(j[key], std::string("command field '") + key + "'");
}

double number_field(const json& j, const char* key) {
  const double v = require_field<double>(j, key, "command");
  if (!std::isfinite(v)) throw FormatError(std::string("command field '") + key + "' is not finite");
  return v;
}

}  // namespace

WireCommand parse_command(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("command must be a JSON object");
  WireCommand cmd;
  if (j.contains("id")) cmd.id = j["id"];
  const auto type = require_field<std::string>(j, "type", "command");
  if (type == "teleop") {
    cmd.kind = WireCommand::Kind::kTeleop;
    cmd.twist = {vec_field(j, "v"), vec_field(j, "w")};
  } else if (type == "trigger") {
    cmd.kind = WireCommand::Kind::kTrigger;
    cmd.hook = require_field<int>(j, "hook", "command");
  } else if (type == "query_error") {
    cmd.kind = WireCommand::Kind::kQueryError;
    cmd.theta2 = number_field(j, "theta2");
    cmd.d3 = number_field(j, "d3");
    cmd.speed = number_field(j, "s");
  } else if (type == "select_speed") {
    cmd.kind = WireCommand::Kind::kSelectSpeed;
    cmd.theta2 = number_field(j, "theta2");
    cmd.d3 = number_field(j, "d3");
    cmd.ebar = number_field(j, "ebar");
  } else if (type == "snapshot") {
    cmd.kind = WireCommand::Kind::kSnapshot;
  } else {
    throw FormatError("unknown command type '" + type + "'");
  }
  return cmd;
}

json error_reply(const json& id, const std::string& message) {
  return {{"type", "error"}, {"id", id}, {"error", message}};
}

json ack_reply(const json& id) { return {{"type", "ack"}, {"id", id}}; }

json answer_grid_query(const WireCommand& cmd, const ErrorGrid* grid) {
  if (!grid) return error_reply(cmd.id, "no error grid loaded");
  if (cmd.kind == WireCommand::Kind::kQueryError) {
    return {{"type", "reply"}, {"id", cmd.id}, {"e_mm", interpolate_error(*grid, cmd.theta2, cmd.d3, cmd.speed)}};
  }
  if (cmd.kind != WireCommand::Kind::kSelectSpeed) return error_reply(cmd.id, "not a grid query");
  try {
    const auto sel = select_speed(*grid, cmd.theta2, cmd.d3, cmd.ebar);
    return {{"type", "reply"}, {"id", cmd.id}, {"s_star", sel.speed_mm_s}, {"e_pred", sel.predicted_error_mm}};
  } catch (const InfeasibleSpeedError& e) {
    json r = error_reply(cmd.id, "infeasible");
    r["suggestion"] = {{"s", e.suggestion().speed_mm_s}, {"e", e.suggestion().predicted_error_mm}};
    return r;
  } catch (const InvalidArgument& e) {
    return error_reply(cmd.id, e.what());
  }
}

json telemetry_message(const RoutingSession& session) {
  const PlantState& s = session.plant();
  const auto est = session.estimated_pose();
  const auto& st = session.state();
  const double sag = boom_deflection(s.q, session.params().deflection).delta + s.vibration.y;
  json active = nullptr;
  if (st.active_hook) active = session.hooks()[static_cast<std::size_t>(*st.active_hook)].id;
  return {{"type", "state"},
          {"t", s.t},
          {"q", joints_to_json(s.q)},
          {"ee_true", pose_to_json(session.tool_pose())},
          {"ee_est", est ? pose_to_json(*est) : json(nullptr)},
          {"mode", mode_name(st.mode)},
          {"active_hook", active},
          {"defl_mm", 1000.0 * sag}};
}

json snapshot_message(const RoutingSession& session) {
  json j = telemetry_message(session);
  j["type"] = "snapshot";
  json hooks = json::array();
  for (const auto& h : session.hooks()) {
    hooks.push_back({{"id", h.id},
                     {"pose", pose_to_json(h.pose)},
                     {"theta2_deg", h.theta2_nominal_deg},
                     {"d3_m", h.d3_nominal},
                     {"s_star", h.s_star},
                     {"e_pred", h.e_pred},
                     {"e_meas", h.e_meas ? json(*h.e_meas) : json(nullptr)},
                     {"completed", h.e_meas.has_value()}});
  }
  j["hooks"] = std::move(hooks);
  j["ebar_mm"] = session.config().ebar_mm;
  return j;
}

namespace {

class Connection;

struct QueuedCommand {
  WireCommand cmd;
  std::weak_ptr<Connection> from;
};

}  // namespace

struct SimulationServer::Impl {
  AppConfig cfg;
  RoutingSession session;
  std::optional<ErrorGrid> grid;

  asio::io_context io;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
  tcp::acceptor acceptor{io};
  std::set<std::shared_ptr<Connection>> connections;  // io thread only

  CommandQueue<QueuedCommand> queue;
  std::thread io_thread, sim_thread;
  std::atomic<bool> running{false};
  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;

  mutable std::mutex snap_mu;
  json snapshot;  // latest state, for snapshot requests off the sim thread

  std::atomic<std::uint64_t> ticks{0}, overruns{0}, telemetry_sent{0};
  std::atomic<std::size_t> client_count{0};

  Impl(AppConfig c, RoutingSession s, std::optional<ErrorGrid> g)
      : cfg(std::move(c)), session(std::move(s)), grid(std::move(g)), queue(cfg.server.queue_capacity) {}

  void accept();
  void handle_line(const std::shared_ptr<Connection>& conn, const std::string& line);
  void broadcast(std::string msg);
  void reply(const std::weak_ptr<Connection>& to, const json& msg);
  void sim_loop();
};

namespace {

// One client. All members are touched on the io thread only.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  static constexpr std::size_t kMaxOutbox = 1024;

  Connection(tcp::socket socket, SimulationServer::Impl& server) : socket_(std::move(socket)), server_(server) {}

  void start() { read(); }

  void send(std::string line) {
    if (!open_) return;
    // A slow reader loses its oldest messages rather than stalling the service.
    if (outbox_.size() >= kMaxOutbox) outbox_.pop_front();
    outbox_.push_back(std::move(line));
    if (!writing_) write();
  }

  void close() {
    if (!open_) return;
    open_ = false;
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
  }

 private:
  void read();
  void write() {
    writing_ = true;
    auto self = shared_from_this();
    asio::async_write(socket_, asio::buffer(outbox_.front()), [self](boost::system::error_code ec, std::size_t) {
      self->outbox_.pop_front();
      if (ec) {
        self->writing_ = false;
        return;
      }
      if (self->outbox_.empty()) {
        self->writing_ = false;
      } else {
        self->write();
      }
    });
  }

  tcp::socket socket_;
  SimulationServer::Impl& server_;
  asio::streambuf buffer_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool open_ = true;
};

}  // namespace

void Connection::read() {
  auto self = shared_from_this();
  asio::async_read_until(socket_, buffer_, '\n', [self](boost::system::error_code ec, std::size_t n) {
    if (ec) {
      self->close();
      self->server_.connections.erase(self);
      self->server_.client_count = self->server_.connections.size();
      return;
    }
    std::string line(asio::buffers_begin(self->buffer_.data()), asio::buffers_begin(self->buffer_.data()) + n);
    self->buffer_.consume(n);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (!line.empty()) self->server_.handle_line(self, line);
    self->read();
  });
}

void SimulationServer::Impl::accept() {
  acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    auto conn = std::make_shared<Connection>(std::move(socket), *this);
    connections.insert(conn);
    client_count = connections.size();
    conn->start();
    accept();
  });
}

void SimulationServer::Impl::handle_line(const std::shared_ptr<Connection>& conn, const std::string& line) {
  WireCommand cmd;
  try {
    cmd = parse_command(line);
  } catch (const FormatError& e) {
    json id = nullptr;
    try {
      const json j = json::parse(line);
      if (j.is_object() && j.contains("id")) id = j["id"];
    } catch (const json::exception&) {
    }
    conn->send(error_reply(id, e.what()).dump() + "\n");
    return;
  }
  switch (cmd.kind) {
    case WireCommand::Kind::kQueryError:
    case WireCommand::Kind::kSelectSpeed:
      conn->send(answer_grid_query(cmd, grid ? &*grid : nullptr).dump() + "\n");
      return;
    case WireCommand::Kind::kSnapshot: {
      json snap;
      {
        std::lock_guard lock(snap_mu);
        snap = snapshot;
      }
      snap["id"] = cmd.id;
      conn->send(snap.dump() + "\n");
      return;
    }
    case WireCommand::Kind::kTeleop:
    case WireCommand::Kind::kTrigger:
      queue.push({cmd, conn}, cmd.kind == WireCommand::Kind::kTeleop);
      return;
  }
}

void SimulationServer::Impl::broadcast(std::string msg) {
  asio::post(io, [this, msg = std::move(msg)] {
    for (const auto& c : connections) c->send(msg);
  });
}

void SimulationServer::Impl::reply(const std::weak_ptr<Connection>& to, const json& msg) {
  asio::post(io, [to, line = msg.dump() + "\n"] {
    if (auto c = to.lock()) c->send(line);
  });
}

void SimulationServer::Impl::sim_loop() {
  using clock = std::chrono::steady_clock;
  const double dt = session.dt();
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(dt));
  const auto decimation =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(1.0 / (cfg.server.telemetry_hz * dt))));
  double last_teleop = -1e300;
  auto deadline = clock::now();
  {
    std::lock_guard lock(snap_mu);
    snapshot = snapshot_message(session);
  }
  while (running) {
    // Latest twist wins; triggers run in arrival order.
    std::optional<QueuedCommand> teleop;
    for (auto& q : queue.drain()) {
      if (q.cmd.kind == WireCommand::Kind::kTeleop) {
        if (teleop) reply(teleop->from, ack_reply(teleop->cmd.id));
        teleop = std::move(q);
        continue;
      }
      const auto result = session.trigger(q.cmd.hook);
      json r = result.accepted ? ack_reply(q.cmd.id) : error_reply(q.cmd.id, result.reason);
      reply(q.from, r);
    }
    if (teleop) {
      session.set_teleop(teleop->cmd.twist);
      last_teleop = session.plant().t;
      reply(teleop->from, ack_reply(teleop->cmd.id));
    } else if (session.plant().t - last_teleop > cfg.server.teleop_timeout) {
      session.set_teleop(Twist{});  // dead-man: a silent operator stops the arm
    }
    session.tick();
    const std::uint64_t n = ++ticks;
    {
      std::lock_guard lock(snap_mu);
      snapshot = snapshot_message(session);
    }
    if (n % decimation == 0) {
      broadcast(telemetry_message(session).dump() + "\n");
      ++telemetry_sent;
    }
    deadline += period;
    const auto now = clock::now();
    if (now > deadline) {
      ++overruns;
      // Fixed-step semantics: never skip simulated time, only resynchronise the clock.
      if (now - deadline > 10 * period) deadline = now;
    } else {
      std::this_thread::sleep_until(deadline);
    }
  }
}

SimulationServer::SimulationServer(AppConfig cfg, RoutingSession session, std::optional<ErrorGrid> grid)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(session), std::move(grid))) {}

SimulationServer::~SimulationServer() { stop(); }

int SimulationServer::start(int port, const std::string& address) {
  Impl& s = *impl_;
  if (s.running) throw std::logic_error("server already started");
  try {
    const tcp::endpoint ep(asio::ip::make_address(address), static_cast<unsigned short>(port));
    s.acceptor.open(ep.protocol());
    s.acceptor.set_option(tcp::acceptor::reuse_address(true));
    s.acceptor.bind(ep);
    s.acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot listen on " + address + ":" + std::to_string(port) + ": " + e.what());
  }
  const int bound = s.acceptor.local_endpoint().port();
  s.work.emplace(s.io.get_executor());
  s.accept();
  s.running = true;
  s.io_thread = std::thread([&s] { s.io.run(); });
  s.sim_thread = std::thread([&s] { s.sim_loop(); });
  return bound;
}

void SimulationServer::stop() {
  Impl& s = *impl_;
  if (s.running.exchange(false)) {
    if (s.sim_thread.joinable()) s.sim_thread.join();
    asio::post(s.io, [&s] {
      boost::system::error_code ec;
      s.acceptor.close(ec);
      for (const auto& c : s.connections) c->close();
      s.connections.clear();
      s.client_count = 0;
    });
    s.work.reset();
    if (s.io_thread.joinable()) s.io_thread.join();
  }
  {
    std::lock_guard lock(s.stop_mu);
    s.stopped = true;
  }
  s.stop_cv.notify_all();
}

void SimulationServer::wait() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [this] { return impl_->stopped; });
}

ServiceStats SimulationServer::stats() const {
  return {impl_->ticks, impl_->overruns, impl_->telemetry_sent, impl_->client_count};
}

void SimulationServer::write_event_log(std::ostream& out) const { impl_->session.write_event_log(out); }

}  // namespace boomarm
