#!/usr/bin/env python3
"""Regenerates scenarios/catalog.json, the bundled example image catalog.

Layer stacks follow the official Docker Hub images (base OS layers shared
through common parents); sizes are compressed transfer sizes rounded to the
nearest 100 kB. Digests are derived from the layer label so the file is
reproducible.
"""

import hashlib
import json
import pathlib

MB = 1_000_000


def digest(label: str) -> str:
    return "sha256:" + hashlib.sha256(label.encode()).hexdigest()


# label -> size in MB
LAYERS = {
    "debian-bookworm-slim": 29.1,
    "debian-bookworm": 49.6,
    "ubuntu-jammy": 29.5,
    "oraclelinux-8-slim": 48.7,
    "alpine-3.19": 3.4,
    "buildpack-curl": 24.0,
    "buildpack-scm": 64.1,
    "buildpack-full": 211.1,
    # redis
    "redis-groupadd": 0.1,
    "redis-gosu": 1.1,
    "redis-build": 8.9,
    "redis-data": 0.1,
    # nginx
    "nginx-pkgs": 41.4,
    "nginx-entrypoint": 0.1,
    # httpd
    "httpd-deps": 5.2,
    "httpd-build": 24.7,
    # php:8.2-apache
    "php-deps": 104.3,
    "php-apache2": 20.1,
    "php-src": 12.4,
    "php-build": 21.3,
    "php-ext": 2.6,
    # wordpress
    "wordpress-ext": 4.1,
    "wordpress-src": 22.6,
    # python
    "python-deps": 6.2,
    "python-build": 20.5,
    "python-pip": 3.3,
    # gcc
    "gcc-build": 148.9,
    "gcc-alternatives": 0.1,
    # node (full and slim)
    "node-full": 48.3,
    "node-yarn": 1.3,
    "node-slim": 40.2,
    # ghost
    "ghost-gosu": 1.2,
    "ghost-app": 151.7,
    # golang
    "golang-deps": 69.4,
    "golang-dist": 66.8,
    # temurin / tomcat
    "temurin-deps": 16.9,
    "temurin-jre": 47.3,
    "tomcat-deps": 1.3,
    "tomcat-dist": 13.2,
    # mysql
    "mysql-gosu": 0.9,
    "mysql-shell": 7.2,
    "mysql-server": 51.8,
    "mysql-client": 60.4,
    # postgres
    "postgres-locale": 4.1,
    "postgres-gosu": 1.2,
    "postgres-server": 100.3,
    # mongo
    "mongo-deps": 11.6,
    "mongo-server": 226.7,
    # version variants: each shares its parent's stack below the top layers
    "redis-build-7.0": 8.6,
    "nginx-pkgs-1.24": 40.9,
    "php-src-8.1": 11.9,
    "php-build-8.1": 20.7,
    "php-ext-8.1": 2.5,
    "wordpress-src-6.4": 22.1,
    "python-build-3.11": 19.8,
    "python-pip-3.11": 3.2,
    "node-full-18": 46.1,
    "node-slim-18": 38.9,
    "ghost-app-5.70": 149.2,
    "gcc-build-12": 141.5,
    "golang-dist-1.21": 65.1,
    "temurin-jre-21": 52.6,
    "tomcat-dist-9": 12.1,
    "mysql-server-8.3": 53.9,
    "mysql-client-8.3": 61.7,
    "postgres-server-15": 97.8,
    "mongo-server-6": 214.0,
    # alpine apps
    "memcached-alpine": 4.6,
    "traefik-alpine": 41.1,
}

BUILDPACK = ["debian-bookworm", "buildpack-curl", "buildpack-scm", "buildpack-full"]
PHP_APACHE = ["debian-bookworm-slim", "php-deps", "php-apache2", "php-src", "php-build", "php-ext"]
PHP_APACHE_81 = ["debian-bookworm-slim", "php-deps", "php-apache2", "php-src-8.1", "php-build-8.1", "php-ext-8.1"]

IMAGES = {
    ("redis", "7"): ["debian-bookworm-slim", "redis-groupadd", "redis-gosu", "redis-build", "redis-data"],
    ("nginx", "1.25"): ["debian-bookworm-slim", "nginx-pkgs", "nginx-entrypoint"],
    ("httpd", "2.4"): ["debian-bookworm-slim", "httpd-deps", "httpd-build"],
    ("php", "8.2-apache"): PHP_APACHE,
    ("wordpress", "6"): PHP_APACHE + ["wordpress-ext", "wordpress-src"],
    ("python", "3.12"): BUILDPACK + ["python-deps", "python-build", "python-pip"],
    ("gcc", "13"): BUILDPACK + ["gcc-build", "gcc-alternatives"],
    ("node", "20"): BUILDPACK + ["node-full", "node-yarn"],
    ("ghost", "5"): ["debian-bookworm-slim", "node-slim", "node-yarn", "ghost-gosu", "ghost-app"],
    ("golang", "1.22"): ["debian-bookworm", "buildpack-curl", "buildpack-scm", "golang-deps", "golang-dist"],
    ("eclipse-temurin", "17-jre"): ["ubuntu-jammy", "temurin-deps", "temurin-jre"],
    ("tomcat", "10"): ["ubuntu-jammy", "temurin-deps", "temurin-jre", "tomcat-deps", "tomcat-dist"],
    ("mysql", "8"): ["oraclelinux-8-slim", "mysql-gosu", "mysql-shell", "mysql-server", "mysql-client"],
    ("postgres", "16"): ["debian-bookworm-slim", "postgres-locale", "postgres-gosu", "postgres-server"],
    ("mongo", "7"): ["ubuntu-jammy", "mongo-deps", "mongo-server"],
    ("redis", "7.0"): ["debian-bookworm-slim", "redis-groupadd", "redis-gosu", "redis-build-7.0", "redis-data"],
    ("nginx", "1.24"): ["debian-bookworm-slim", "nginx-pkgs-1.24", "nginx-entrypoint"],
    ("php", "8.1-apache"): PHP_APACHE_81,
    ("wordpress", "6.4"): PHP_APACHE_81 + ["wordpress-ext", "wordpress-src-6.4"],
    ("python", "3.11"): BUILDPACK + ["python-deps", "python-build-3.11", "python-pip-3.11"],
    ("gcc", "12"): BUILDPACK + ["gcc-build-12", "gcc-alternatives"],
    ("node", "18"): BUILDPACK + ["node-full-18", "node-yarn"],
    ("ghost", "5.70"): ["debian-bookworm-slim", "node-slim-18", "node-yarn", "ghost-gosu", "ghost-app-5.70"],
    ("golang", "1.21"): ["debian-bookworm", "buildpack-curl", "buildpack-scm", "golang-deps", "golang-dist-1.21"],
    ("eclipse-temurin", "21-jre"): ["ubuntu-jammy", "temurin-deps", "temurin-jre-21"],
    ("tomcat", "9"): ["ubuntu-jammy", "temurin-deps", "temurin-jre", "tomcat-deps", "tomcat-dist-9"],
    ("mysql", "8.3"): ["oraclelinux-8-slim", "mysql-gosu", "mysql-shell", "mysql-server-8.3", "mysql-client-8.3"],
    ("postgres", "15"): ["debian-bookworm-slim", "postgres-locale", "postgres-gosu", "postgres-server-15"],
    ("mongo", "6"): ["ubuntu-jammy", "mongo-deps", "mongo-server-6"],
    ("memcached", "1.6-alpine"): ["alpine-3.19", "memcached-alpine"],
    ("traefik", "3"): ["alpine-3.19", "traefik-alpine"],
}


def main() -> None:
    out = {}
    for (name, tag), labels in IMAGES.items():
        l_meta = [{"size": int(round(LAYERS[l] * MB)), "layer": digest(l)} for l in labels]
        out[f"{name}:{tag}"] = {
            "id": digest(f"config:{name}:{tag}"),
            "name": name,
            "name_without_repo": name,
            "tag": tag,
            "total_size": sum(l["size"] for l in l_meta),
            "l_meta": l_meta,
        }
    path = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "catalog.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
