#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sgs/annotation.hpp"
#include "sgs/coap.hpp"
#include "sgs/config.hpp"
#include "sgs/error.hpp"
#include "sgs/model.hpp"
#include "sgs/mqtt.hpp"
#include "sgs/proxy.hpp"

namespace py = pybind11;
using namespace sgs;

namespace {

Bytes to_bytes(const py::bytes& b) {
    const std::string_view s = b;
    return {s.begin(), s.end()};
}

py::bytes from_bytes(const Bytes& b) {
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

py::dict message_to_dict(const coap::Message& m) {
    py::list options;
    for (const auto& o : m.options) options.append(py::make_tuple(o.number, from_bytes(o.value)));
    py::dict d;
    d["type"] = static_cast<int>(m.type);
    d["code"] = py::make_tuple(m.code.cls, m.code.detail);
    d["message_id"] = m.message_id;
    d["token"] = from_bytes(m.token);
    d["options"] = options;
    d["payload"] = from_bytes(m.payload);
    return d;
}

coap::Message dict_to_message(const py::dict& d) {
    coap::Message m;
    m.type = static_cast<coap::MessageType>(d["type"].cast<int>());
    const auto code = d["code"].cast<std::pair<int, int>>();
    m.code = {static_cast<std::uint8_t>(code.first), static_cast<std::uint8_t>(code.second)};
    m.message_id = d["message_id"].cast<std::uint16_t>();
    if (d.contains("token")) m.token = to_bytes(d["token"]);
    if (d.contains("options"))
        for (const auto& o : d["options"].cast<py::list>()) {
            const auto t = o.cast<py::tuple>();
            m.add_option(t[0].cast<std::uint16_t>(), to_bytes(t[1]));
        }
    if (d.contains("payload")) m.payload = to_bytes(d["payload"]);
    return m;
}

py::list graph_to_list(const rdf::Graph& g) {
    py::list out;
    for (const auto& t : g) out.append(py::make_tuple(t.subject.str(), t.predicate.str(), t.object.str()));
    return out;
}

PayloadFormat parse_format(const std::string& f) {
    if (f == "json") return PayloadFormat::json;
    if (f == "xml") return PayloadFormat::xml;
    throw Error(ErrorCode::ParseError, "unknown payload format " + f);
}

class PyGateway {
public:
    explicit PyGateway(const std::string& config_path) {
        auto config = service::load_config(config_path);
        gateway_ = std::make_unique<proxy::Gateway>(config.registry, config.ontology, config.gateway);
    }

    std::string ingest(const std::string& raw_topic, const std::string& payload, const std::string& format,
                       const std::string& protocol) {
        proxy::IngestEvent e{Topic::parse(raw_topic), payload, parse_format(format),
                             protocol == "mqtt" ? Protocol::mqtt : Protocol::coap, now_utc(), false};
        const auto r = gateway_->ingest(e);
        if (!r.stored) throw Error(ErrorCode::ParseError, r.error);
        return r.stored->annotated_jsonld;
    }

    std::optional<py::dict> latest(const std::string& topic) const {
        const auto m = gateway_->store().fetch_latest(Topic::parse(topic));
        if (!m) return std::nullopt;
        py::dict d;
        d["topic"] = m->topic.str();
        d["raw"] = m->raw_payload;
        d["jsonld"] = m->annotated_jsonld;
        d["sequence"] = m->sequence;
        d["received_at"] = format_rfc3339(m->received_at);
        return d;
    }

    py::dict counters() const {
        const auto& c = gateway_->counters();
        py::dict d;
        d["ingested"] = c.ingested.load();
        d["parse_errors"] = c.parse_errors.load();
        d["annotation_errors"] = c.annotation_errors.load();
        d["drops"] = c.drops->load();
        return d;
    }

private:
    std::unique_ptr<proxy::Gateway> gateway_;
};

}  // namespace

PYBIND11_MODULE(_sgs, m) {
    m.doc() = "Semantic gateway core: codecs, topic matching and observation annotation";

    static py::exception<Error> sgs_error(m, "SgsError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object code = py::str(std::string(to_string(e.code())));
            PyErr_SetObject(sgs_error.ptr(), py::make_tuple(py::str(e.what()), code).ptr());
        }
    });

    m.def("coap_decode", [](const py::bytes& b) { return message_to_dict(coap::decode(to_bytes(b))); });
    m.def("coap_encode", [](const py::dict& d) { return from_bytes(coap::encode(dict_to_message(d))); });

    m.def("encode_remaining_length", [](std::uint32_t v) { return from_bytes(mqtt::encode_remaining_length(v)); });
    m.def("decode_remaining_length", [](const py::bytes& b) -> std::optional<std::pair<std::uint32_t, std::size_t>> {
        const auto r = mqtt::decode_remaining_length(to_bytes(b));
        if (!r) return std::nullopt;
        return std::make_pair(r->value, r->bytes_used);
    });
    m.def(
        "mqtt_reencode",
        [](const py::bytes& b) -> std::optional<py::tuple> {
            const auto d = mqtt::decode(to_bytes(b));
            if (!d) return std::nullopt;
            return py::make_tuple(std::string(mqtt::packet_name(d->packet)), from_bytes(mqtt::encode(d->packet)),
                                  d->bytes_consumed);
        },
        "Decodes the first packet and returns (name, canonical bytes, bytes consumed), or None if incomplete.");

    m.def("matches", [](const std::string& filter, const std::string& topic) {
        return proxy::matches(parse_topic_filter(filter), Topic::parse(topic));
    });
    m.def("topic_from_uri_path",
          [](const std::vector<std::string>& segments) { return topic_from_uri_path(segments).str(); });
    m.def("north_topic", [](const std::string& raw) { return north_topic_for(Topic::parse(raw)).str(); });
    m.def("raw_topic", [](const std::string& north) { return raw_topic_for(Topic::parse(north)).str(); });

    m.def("from_jsonld", [](const std::string& doc) { return graph_to_list(annotation::from_jsonld(doc)); });
    m.def("check_shape", [](const std::string& doc) {
        const auto r = annotation::check_shape(annotation::parse_jsonld(doc));
        py::dict d;
        d["missing"] = r.missing;
        d["has_unit"] = r.has_unit;
        d["extra"] = r.extra;
        d["exact"] = r.exact();
        return d;
    });

    py::class_<PyGateway>(m, "Gateway")
        .def(py::init<const std::string&>(), py::arg("config_path"))
        .def("ingest", &PyGateway::ingest, py::arg("raw_topic"), py::arg("payload"), py::arg("format") = "json",
             py::arg("protocol") = "coap", "Annotates and stores one reading; returns the JSON-LD document.")
        .def("latest", &PyGateway::latest, py::arg("topic"))
        .def("counters", &PyGateway::counters);
}
