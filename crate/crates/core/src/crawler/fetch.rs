use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use thiserror::Error;

use crate::http::{canonicalize, HttpRequest, HttpResponse};
use crate::origin::{handle, SiteConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("fetch failed for {uri}: {message}")]
pub struct FetchError {
    pub uri: String,
    pub message: String,
}

pub trait Fetch {
    fn fetch(&mut self, request: &HttpRequest) -> Result<HttpResponse, FetchError>;
}

impl<F> Fetch for F
where
    F: FnMut(&HttpRequest) -> Result<HttpResponse, FetchError>,
{
    fn fetch(&mut self, request: &HttpRequest) -> Result<HttpResponse, FetchError> {
        self(request)
    }
}

/// Calls the origin simulator in-process.
#[derive(Debug, Clone)]
pub struct SiteFetcher<'a>(pub &'a SiteConfig);

impl Fetch for SiteFetcher<'_> {
    fn fetch(&mut self, request: &HttpRequest) -> Result<HttpResponse, FetchError> {
        Ok(handle(request, self.0))
    }
}

/// Plain HTTP/1.1 client that sends every request to one socket address,
/// keeping the URI's host in the `Host` header. One connection per request.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    pub addr: SocketAddr,
    pub timeout: Duration,
}

impl HttpFetcher {
    pub fn new(addr: SocketAddr) -> Self {
        HttpFetcher {
            addr,
            timeout: Duration::from_secs(10),
        }
    }
}

impl Fetch for HttpFetcher {
    fn fetch(&mut self, request: &HttpRequest) -> Result<HttpResponse, FetchError> {
        let fail = |message: String| FetchError {
            uri: request.uri.clone(),
            message,
        };
        let uri = canonicalize(&request.uri).map_err(|e| fail(e.to_string()))?;
        let mut head = format!(
            "{} {} HTTP/1.1\r\nhost: {}\r\n",
            request.method,
            uri.path_and_query(),
            uri.host()
        );
        for (n, v) in request
            .headers
            .iter()
            .filter(|(n, _)| *n != "host" && *n != "connection")
        {
            head.push_str(&format!("{n}: {v}\r\n"));
        }
        head.push_str("connection: close\r\n\r\n");

        let mut stream = TcpStream::connect_timeout(&self.addr, self.timeout).map_err(|e| fail(e.to_string()))?;
        stream.set_read_timeout(Some(self.timeout)).ok();
        stream.write_all(head.as_bytes()).map_err(|e| fail(e.to_string()))?;
        let mut raw = Vec::new();
        stream.read_to_end(&mut raw).map_err(|e| fail(e.to_string()))?;
        parse_response(&raw).map_err(|m| fail(m.to_string()))
    }
}

fn parse_response(raw: &[u8]) -> Result<HttpResponse, &'static str> {
    let split = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .ok_or("response head not terminated")?;
    let head = std::str::from_utf8(&raw[..split]).map_err(|_| "response head is not UTF-8")?;
    let mut lines = head.split("\r\n");
    let status: u16 = lines
        .next()
        .and_then(|l| l.split(' ').nth(1))
        .and_then(|s| s.parse().ok())
        .filter(|s| (100..=599).contains(s))
        .ok_or("bad status line")?;
    let mut resp = HttpResponse::new(status);
    for line in lines {
        let (n, v) = line.split_once(':').ok_or("bad header line")?;
        resp.headers.append(n.trim(), v.trim());
    }
    let rest = &raw[split + 4..];
    let chunked = resp
        .headers
        .get("transfer-encoding")
        .is_some_and(|te| te.eq_ignore_ascii_case("chunked"));
    resp.body = if chunked {
        dechunk(rest)?
    } else if let Some(len) = resp.headers.get("content-length").and_then(|l| l.parse::<usize>().ok()) {
        rest.get(..len).ok_or("body shorter than content-length")?.to_vec()
    } else {
        rest.to_vec()
    };
    Ok(resp)
}

fn dechunk(mut data: &[u8]) -> Result<Vec<u8>, &'static str> {
    let mut out = Vec::new();
    loop {
        let eol = data
            .windows(2)
            .position(|w| w == b"\r\n")
            .ok_or("bad chunk size line")?;
        let size_str = std::str::from_utf8(&data[..eol]).map_err(|_| "bad chunk size")?;
        let size =
            usize::from_str_radix(size_str.split(';').next().unwrap_or("").trim(), 16).map_err(|_| "bad chunk size")?;
        data = &data[eol + 2..];
        if size == 0 {
            return Ok(out);
        }
        out.extend_from_slice(data.get(..size).ok_or("truncated chunk")?);
        data = data.get(size + 2..).ok_or("truncated chunk")?;
    }
}
