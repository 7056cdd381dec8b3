#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace microflow {

/// Tagged scalar union used for test data, event payloads and wire bodies.
///
/// Numbers are IEEE doubles. The canonical form prints integral values
/// below 2^53 without a fraction and everything else in shortest
/// round-trip notation, so two values are structurally equal exactly when
/// their canonical serializations are byte-identical.
class Value {
 public:
  using List = std::vector<Value>;
  using Object = std::map<std::string, Value, std::less<>>;

  enum class Type { Null, Boolean, Number, String, List, Object };

  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : data_(b) {}
  Value(double d);
  Value(int i) : Value(static_cast<double>(i)) {}
  Value(std::int64_t i) : Value(static_cast<double>(i)) {}
  Value(std::uint64_t i) : Value(static_cast<double>(i)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(std::string_view s) : data_(std::string(s)) {}
  Value(List l) : data_(std::move(l)) {}
  Value(Object o) : data_(std::move(o)) {}

  static Value list() { return Value(List{}); }
  static Value object() { return Value(Object{}); }

  Type type() const { return static_cast<Type>(data_.index()); }
  bool is_null() const { return type() == Type::Null; }
  bool is_bool() const { return type() == Type::Boolean; }
  bool is_number() const { return type() == Type::Number; }
  bool is_string() const { return type() == Type::String; }
  bool is_list() const { return type() == Type::List; }
  bool is_object() const { return type() == Type::Object; }

  // Typed accessors throw BadRequest on a type mismatch; wire bodies are
  // decoded through them.
  bool as_bool() const;
  double as_number() const;
  std::int64_t as_int() const;
  const std::string& as_string() const;
  const List& as_list() const;
  List& as_list();
  const Object& as_object() const;
  Object& as_object();

  bool contains(std::string_view key) const;
  const Value& at(std::string_view key) const;
  /// Member lookup returning null for absent keys (or non-objects).
  const Value& get(std::string_view key) const;
  Value& operator[](std::string_view key);
  void push_back(Value v) { as_list().push_back(std::move(v)); }

  friend bool operator==(const Value& a, const Value& b) = default;

 private:
  std::variant<std::monostate, bool, double, std::string, List, Object> data_;
};

/// UTF-8 JSON with sorted keys and no insignificant whitespace.
std::string canonicalize(const Value& value);

/// Parses JSON text. Throws DomainError(BadRequest) on malformed input.
Value parse_json(std::string_view text);

const char* type_name(Value::Type type);

}  // namespace microflow
