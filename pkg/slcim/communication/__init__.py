#
# __init__.py: factory for typed message queues
#
# Copyright (C) 2024  The slcim authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

import queue
import re


def _constant_part(name):
    return re.sub(r"[^0-9A-Za-z]+", "_", name).upper()


class QueueFactory(object):
    """Wraps a queue.Queue together with message codes and typed senders.

       Creating a new object using this class is done like so:

           q = QueueFactory("run")

       And then registering messages is done like so:

           q.add_message("done", 2)
           q.add_message("exception", 1)

       The first call creates the constant RUN_CODE_DONE and a method
       send_done taking two arguments, the second one RUN_CODE_EXCEPTION and
       send_exception taking one. Messages land in the queue as
       (code, arguments) tuples.

       Reusing names within the same factory is not allowed.
    """

    def __init__(self, name):
        self.name = name

        self._counter = 0
        self._names = []

        self.q = queue.Queue()

    def _make_method(self, code, method_name, argc):
        def _method(*args):
            if len(args) != argc:
                raise TypeError("%s() takes exactly %d arguments (%d given)" %
                                (method_name, argc, len(args)))

            self.q.put((code, args))

        _method.__name__ = method_name
        return _method

    def add_message(self, name, argc):
        if name in self._names:
            raise AttributeError("%s queue already has a message named %s" % (self.name, name))

        const_name = _constant_part(self.name) + "_CODE_" + _constant_part(name)
        setattr(self, const_name, self._counter)
        self._counter += 1

        method_name = "send_" + _constant_part(name).lower()
        setattr(self, method_name, self._make_method(getattr(self, const_name), method_name, argc))

        self._names.append(name)

    def get(self, timeout=None):
        return self.q.get(timeout=timeout)

    def empty(self):
        return self.q.empty()
