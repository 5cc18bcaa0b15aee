package org.owasp.benchmark.testcode;

import java.io.IOException;

import javax.servlet.ServletException;
import javax.servlet.annotation.WebServlet;
import javax.servlet.http.HttpServlet;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;

@WebServlet(value = "/xss-00/BenchmarkTest00005")
public class BenchmarkTest00005 extends HttpServlet {

    private static final long serialVersionUID = 1L;

    private final java.util.Properties benchprops =
            org.owasp.benchmark.helpers.Utils.loadBenchmarkProperties();

    @Override
    public void doGet(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        doPost(request, response);
    }

    @Override
    public void doPost(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        response.setContentType("text/html;charset=UTF-8");

        String param = request.getParameter("displayName") + request.getParameter("homeTown");
        response.getWriter().println("<p>Hello, " + param + "</p>");
    }
}
