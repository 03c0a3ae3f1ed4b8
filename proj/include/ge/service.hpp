/*
 * Copyright 2026 The Grounded Explainer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// WebSocket session service: one session per connection, one JSON wire
// message per text frame.

#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "ge/config.hpp"
#include "ge/dialog_http.hpp"
#include "ge/engine.hpp"
#include "ge/protocol.hpp"
#include "ge/transcript.hpp"

namespace ge {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct ServiceOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  std::filesystem::path store = "transcripts";
  std::chrono::milliseconds tick{100};
};

// "host:port" as used by GE_BIND.
inline std::pair<std::string, unsigned short> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw Error(Errc::kInvalidArgument, "bind address must be host:port, got '" + text + "'");
  int port = 0;
  if (!detail::parse_number(std::string_view(text).substr(colon + 1), port) || port < 0 || port > 65535)
    throw Error(Errc::kInvalidArgument, "bad port in '" + text + "'");
  return {text.substr(0, colon), static_cast<unsigned short>(port)};
}

inline std::string sanitize_session_id(const std::string& id) {
  std::string out;
  for (char c : id)
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') out += c;
  return out;
}

// Drives one connection on its own io_context. All session state is touched
// only from that context's single thread.
class SessionConnection : public std::enable_shared_from_this<SessionConnection> {
 public:
  SessionConnection(tcp::socket socket, net::io_context& ioc, std::shared_ptr<const SessionConfig> config,
                    ServiceOptions options, std::function<std::string()> next_id)
      : ws_(std::move(socket)),
        timer_(ioc),
        config_(std::move(config)),
        options_(std::move(options)),
        next_id_(std::move(next_id)) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read();
      self->tick();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->timer_.cancel();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      if (!self->closing_) self->read();
    });
  }

  void tick() {
    timer_.expires_after(options_.tick);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      if (self->engine_ && self->live_clock_ && !self->engine_->done()) {
        try {
          self->engine_->advance_to(std::max(self->now_ms(), self->engine_->clock()));
        } catch (const std::exception& e) {
          self->send(error_message(self->session_id_, self->engine_->clock(), e.what(), "tick"));
        }
        self->after_input();
      }
      self->tick();
    });
  }

  TimestampMs now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch_).count();
  }

  void handle(const std::string& text) {
    Inbound in;
    const TimestampMs reply_t = engine_ ? engine_->clock() : 0;
    try {
      in = parse_inbound(Json::parse(text));
    } catch (const std::exception& e) {
      send(error_message(session_id_, reply_t, e.what(), "unparsed"));
      return;
    }
    try {
      if (const auto* start = std::get_if<StartRequest>(&in.body)) {
        if (engine_) throw Error(Errc::kInvalidArgument, "session already started");
        begin(in, *start);
        return;
      }
      if (!engine_) throw Error(Errc::kInvalidArgument, "send session.start first");
      if (engine_->done()) throw Error(Errc::kInvalidArgument, "session has ended");
      stamp(in, in.timestamp_ms ? *in.timestamp_ms : std::max(now_ms(), engine_->clock()));
      std::visit(
          [&](auto& body) {
            using B = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<B, SessionEvent>)
              engine_->push_user(body);
            else if constexpr (std::is_same_v<B, SampleInput>)
              engine_->push_sample(body.sample);
            else if constexpr (std::is_same_v<B, PresentationAck>)
              engine_->acknowledge_presentation(body.feature_id, *in.timestamp_ms);
          },
          in.body);
      after_input();
    } catch (const std::exception& e) {
      send(error_message(session_id_, engine_ ? engine_->clock() : 0, e.what(), in.type));
    }
  }

  void begin(const Inbound& in, const StartRequest& start) {
    std::string id = start.session_id.value_or(in.session_id);
    id = sanitize_session_id(id);
    if (id.empty()) id = next_id_();
    session_id_ = id;
    live_clock_ = !in.timestamp_ms.has_value();
    epoch_ = std::chrono::steady_clock::now();
    auto client = make_dialog_client(config_->dialog_service_url, std::chrono::milliseconds(config_->dialog_timeout_ms),
                                     config_->dialog_retries);
    engine_ = std::make_unique<SessionEngine>(config_->rules(),
                                              EngineOptions::from(*config_, PresentationMode::kAcknowledged),
                                              std::move(client), session_id_);
    engine_->on_entry([this](const TranscriptEntry& e) {
      for (auto& m : outbound_messages(e, session_id_)) send(m);
    });
    engine_->start(in.timestamp_ms.value_or(0));
  }

  void after_input() {
    if (!engine_->done() || persisted_) return;
    persisted_ = true;
    try {
      persist_transcript(engine_->transcript(), options_.store, session_id_);
    } catch (const std::exception& e) {
      send(error_message(session_id_, engine_->clock(), e.what(), "persist"));
    }
    closing_ = true;
    close_after_writes_ = true;
    if (!writing_) close();
  }

  void send(const Json& message) {
    outbox_.push_back(message.dump());
    if (!writing_) write_next();
  }

  void write_next() {
    if (outbox_.empty()) {
      writing_ = false;
      if (close_after_writes_) close();
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->outbox_.pop_front();
      if (ec) {
        self->outbox_.clear();
        self->writing_ = false;
        return;
      }
      self->write_next();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::shared_ptr<const SessionConfig> config_;
  ServiceOptions options_;
  std::function<std::string()> next_id_;
  std::unique_ptr<SessionEngine> engine_;
  std::string session_id_;
  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
  std::deque<std::string> outbox_;
  bool live_clock_ = false;
  bool writing_ = false;
  bool persisted_ = false;
  bool closing_ = false;
  bool close_after_writes_ = false;
  bool closed_ = false;
};

// Accepts connections and runs each on its own thread.
class SessionServer {
 public:
  SessionServer(SessionConfig config, ServiceOptions options)
      : config_(std::make_shared<const SessionConfig>(std::move(config))),
        options_(std::move(options)),
        acceptor_(accept_ioc_) {
    tcp::endpoint endpoint(net::ip::make_address(options_.address), options_.port);
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen();
  }

  ~SessionServer() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  // Blocks until stop().
  void run() {
    while (!stopping_) {
      auto ioc = std::make_unique<net::io_context>();
      tcp::socket socket(*ioc);
      beast::error_code ec;
      acceptor_.accept(socket, ec);
      if (stopping_) break;
      if (ec) continue;
      std::lock_guard lock(mutex_);
      auto connection = std::make_shared<SessionConnection>(std::move(socket), *ioc, config_, options_,
                                                            [this] { return next_id(); });
      auto& worker = workers_.emplace_back();
      worker.ioc = std::move(ioc);
      worker.thread = std::thread([ioc = worker.ioc.get(), connection] {
        connection->run();
        ioc->run();
      });
    }
  }

  void start() {
    runner_ = std::thread([this] { run(); });
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    beast::error_code ec;
    if (runner_.joinable()) {
      // Wake the blocking accept.
      net::io_context ioc;
      tcp::socket wake(ioc);
      auto endpoint = acceptor_.local_endpoint(ec);
      if (endpoint.address().is_unspecified()) endpoint.address(net::ip::make_address("127.0.0.1"));
      wake.connect(endpoint, ec);
      runner_.join();
    }
    acceptor_.close(ec);
    std::lock_guard lock(mutex_);
    for (auto& w : workers_) {
      w.ioc->stop();
      if (w.thread.joinable()) w.thread.join();
    }
  }

 private:
  struct Worker {
    std::unique_ptr<net::io_context> ioc;
    std::thread thread;
  };

  std::string next_id() { return "session-" + std::to_string(++counter_); }

  std::shared_ptr<const SessionConfig> config_;
  ServiceOptions options_;
  net::io_context accept_ioc_;
  tcp::acceptor acceptor_;
  std::atomic<bool> stopping_{false};
  std::atomic<int> counter_{0};
  std::thread runner_;
  std::mutex mutex_;
  std::list<Worker> workers_;
};

}  // namespace ge
