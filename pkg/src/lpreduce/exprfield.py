"""Minimal arithmetic expression language for config-defined systems.

Grammar (standard precedence, ^ binds tightest and associates right):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := unary ('^' factor)?
    unary   := '-' unary | primary
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Functions: sin, cos, exp, sqrt. Variables are indexed names declared by the
caller (for example Q1..Q4, f1..f3, a1..a3); evaluation is numpy
element-wise, so compiled expressions broadcast over batched inputs.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
                    r"|\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*)|([()+\-*/^]))")

_FUNCTIONS = {
    'sin': np.sin,
    'cos': np.cos,
    'exp': np.exp,
    'sqrt': np.sqrt,
}


def tokenize(text, field=None):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ConfigError(f"unexpected character {text[pos:].strip()[0]!r} in expression {text!r}",
                              field=field)
        number, name, power, op = m.groups()
        if number is not None:
            tokens.append(('num', float(number)))
        elif name is not None:
            tokens.append(('name', name))
        elif power is not None:
            tokens.append(('op', '^'))
        else:
            tokens.append(('op', op))
        pos = m.end()
    tokens.append(('end', None))
    return tokens


class _Parser:
    def __init__(self, tokens, variables, field):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables
        self.field = field

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, op):
        kind, val = self.take()
        if kind != 'op' or val != op:
            raise ConfigError(f"expected {op!r}, found {val!r}", field=self.field)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != 'end':
            raise ConfigError(f"trailing input at token {self.peek()[1]!r}", field=self.field)
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ('op', '+') or self.peek() == ('op', '-'):
            _, op = self.take()
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ('op', '*') or self.peek() == ('op', '/'):
            _, op = self.take()
            node = (op, node, self.factor())
        return node

    def factor(self):
        base = self.unary()
        if self.peek() == ('op', '^'):
            self.take()
            return ('^', base, self.factor())
        return base

    def unary(self):
        if self.peek() == ('op', '-'):
            self.take()
            return ('neg', self.unary())
        return self.primary()

    def primary(self):
        kind, val = self.take()
        if kind == 'num':
            return ('num', val)
        if kind == 'name':
            if self.peek() == ('op', '('):
                if val not in _FUNCTIONS:
                    raise ConfigError(f"unknown function {val!r}", field=self.field)
                self.take()
                arg = self.expr()
                self.expect(')')
                return ('call', val, arg)
            if val not in self.variables:
                raise ConfigError(f"unknown variable {val!r}; allowed: {sorted(self.variables)}",
                                  field=self.field)
            return ('var', val)
        if (kind, val) == ('op', '('):
            node = self.expr()
            self.expect(')')
            return node
        raise ConfigError(f"unexpected token {val!r}", field=self.field)


def parse(text, variables, field=None):
    """Parse ``text`` into an AST, permitting only the given variable names."""
    return _Parser(tokenize(text, field), set(variables), field).parse()


def _eval(node, env):
    op = node[0]
    if op == 'num':
        return node[1]
    if op == 'var':
        return env[node[1]]
    if op == 'neg':
        return -_eval(node[1], env)
    if op == 'call':
        return _FUNCTIONS[node[1]](_eval(node[2], env))
    a = _eval(node[1], env)
    b = _eval(node[2], env)
    if op == '+':
        return a + b
    if op == '-':
        return a - b
    if op == '*':
        return a * b
    if op == '/':
        return a / b
    if op == '^':
        return a ** b
    raise AssertionError(f"corrupt AST node {node!r}")


def compile_expression(text, variables, field=None):
    """Compile to a callable of keyword environments: fn(**{name: array})."""
    ast = parse(text, variables, field)

    def fn(**env):
        return _eval(ast, env)

    fn.source = text
    return fn


def indexed_names(prefix, count):
    """1-based indexed variable names, for example Q1..Qn."""
    return [f"{prefix}{i + 1}" for i in range(count)]


def indexed_env(prefix, array):
    """Environment dict mapping indexed names onto coordinate slices."""
    array = np.asarray(array)
    return {f"{prefix}{i + 1}": array[..., i] for i in range(array.shape[-1])}
