#pragma once

#include <nlohmann/json.hpp>

#include <mutex>
#include <ostream>
#include <string>
#include <vector>

namespace trr {

/// One structured runtime event (received, forwarded, released, acked, ...).
struct Event {
    std::string kind;
    std::string node;
    nlohmann::json detail = nlohmann::json::object();
};

class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void emit(const Event& event) = 0;
};

/// Writes one JSON object per line.
class JsonLinesSink : public EventSink {
public:
    explicit JsonLinesSink(std::ostream& out) : out_(out) {}
    void emit(const Event& event) override;

private:
    std::ostream& out_;
    std::mutex mu_;
};

class MemorySink : public EventSink {
public:
    void emit(const Event& event) override;
    std::vector<Event> events() const;
    std::size_t count(std::string_view kind) const;

private:
    mutable std::mutex mu_;
    std::vector<Event> events_;
};

nlohmann::json to_json(const Event& event);

} // namespace trr
