#include "trr/event_log.hpp"

#include <algorithm>

namespace trr {

nlohmann::json to_json(const Event& event)
{
    nlohmann::json j = event.detail;
    j["event"] = event.kind;
    j["node"] = event.node;
    return j;
}

void JsonLinesSink::emit(const Event& event)
{
    std::lock_guard lock(mu_);
    out_ << to_json(event).dump() << '\n';
    out_.flush();
}

void MemorySink::emit(const Event& event)
{
    std::lock_guard lock(mu_);
    events_.push_back(event);
}

std::vector<Event> MemorySink::events() const
{
    std::lock_guard lock(mu_);
    return events_;
}

std::size_t MemorySink::count(std::string_view kind) const
{
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [&](const Event& e) { return e.kind == kind; }));
}

} // namespace trr
